// Copyright 2026 The RHIRL Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "rhirl/core.hpp"

#include <functional>
#include <string>
#include <vector>

namespace rhirl {

/// Static description of a task.
struct EnvSpec {
  std::string name;
  int n = 0;
  int m = 0;
  double dt = 0.0;
  int T = 0;
  ControlBox box;
  /// Initial states are drawn uniformly from [init_lo, init_hi] in the task's
  /// internal coordinates (see each maker) before encoding.
  Eigen::VectorXd init_lo;
  Eigen::VectorXd init_hi;
};

/// Ground-truth one-step cost c(x, v) = state_cost(x) + control_weight * |v|^2.
struct GroundTruthCost {
  std::function<double(const StateVec&)> state_cost;
  double control_weight = 0.0;

  double step_cost(const StateVec& x, const ControlVec& v) const {
    return state_cost(x) + control_weight * v.squaredNorm();
  }
};

struct Environment {
  ModelPtr model;
  EnvSpec spec;
  GroundTruthCost cost;
  std::function<StateVec(RngStream&)> sample_initial;
};

/// Torque-limited pendulum with Gym Pendulum-v0 constants. Observation
/// (cos th, sin th, thdot), th = 0 upright.
Environment make_pendulum();

/// Point mass on a line: state (position, velocity), control acceleration.
Environment make_double_integrator();

/// Cart with a point-mass pole. Observation (x, cos th, sin th, xdot, thdot),
/// th = 0 upright; episodes start hanging down.
Environment make_cartpole_swingup();

/// Lookup by name: "pendulum", "double-integrator", "cartpole-swingup".
Environment make_env(const std::string& name);

const std::vector<std::string>& env_names();

/// Double-integrator discretisation x' = A x + B u (semi-implicit Euler).
struct LinearDynamics {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
};
LinearDynamics double_integrator_matrices(double dt);

/// Quadratic weights of the double-integrator ground truth, x'Qx + u'Ru.
struct QuadraticWeights {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
};
QuadraticWeights double_integrator_weights();

/// Angle recovered from a (cos, sin) pair.
double decode_angle(double c, double s);

/// Total mechanical energy of the cartpole in observation coordinates.
double cartpole_energy(const StateVec& x);

}  // namespace rhirl
