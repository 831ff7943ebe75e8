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

#include "rhirl/environments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rhirl {

namespace {

// Rotate the unit vector (c, s) by `delta` and renormalise so that
// c^2 + s^2 stays at 1 over long episodes.
void rotate(double& c, double& s, double delta) {
  const double cd = std::cos(delta);
  const double sd = std::sin(delta);
  const double nc = c * cd - s * sd;
  const double ns = s * cd + c * sd;
  const double r = std::hypot(nc, ns);
  c = nc / r;
  s = ns / r;
}

class PendulumModel final : public DynamicsModel {
 public:
  static constexpr double kGravity = 10.0;
  static constexpr double kMass = 1.0;
  static constexpr double kLength = 1.0;
  static constexpr double kMaxSpeed = 8.0;
  static constexpr double kDt = 0.05;

  int state_dim() const override { return 3; }
  int control_dim() const override { return 1; }
  double dt() const override { return kDt; }

  StateVec next_state(const StateVec& x, const ControlVec& v) const override {
    double c = x(0);
    double s = x(1);
    const double thdot = x(2);
    // Gym writes -3g/(2l) sin(th + pi); sin(th + pi) = -sin(th).
    double next_thdot = thdot + (3.0 * kGravity / (2.0 * kLength) * s +
                                 3.0 / (kMass * kLength * kLength) * v(0)) *
                                    kDt;
    const double delta = next_thdot * kDt;
    next_thdot = std::clamp(next_thdot, -kMaxSpeed, kMaxSpeed);
    if (delta != 0.0) {
      rotate(c, s, delta);
    }
    StateVec out(3);
    out << c, s, next_thdot;
    return out;
  }
};

class DoubleIntegratorModel final : public DynamicsModel {
 public:
  explicit DoubleIntegratorModel(double dt) : dt_(dt) {}

  int state_dim() const override { return 2; }
  int control_dim() const override { return 1; }
  double dt() const override { return dt_; }

  StateVec next_state(const StateVec& x, const ControlVec& v) const override {
    const double vel = x(1) + v(0) * dt_;
    StateVec out(2);
    out << x(0) + vel * dt_, vel;
    return out;
  }

 private:
  double dt_;
};

class CartpoleModel final : public DynamicsModel {
 public:
  static constexpr double kCartMass = 1.0;
  static constexpr double kPoleMass = 0.1;
  static constexpr double kLength = 0.5;
  static constexpr double kGravity = 9.8;
  static constexpr double kDt = 0.05;

  int state_dim() const override { return 5; }
  int control_dim() const override { return 1; }
  double dt() const override { return kDt; }

  StateVec next_state(const StateVec& x, const ControlVec& v) const override {
    const double pos = x(0);
    double c = x(1);
    double s = x(2);
    const double xdot = x(3);
    const double thdot = x(4);
    const double force = v(0);
    const double xacc = (force + kPoleMass * s * (kLength * thdot * thdot - kGravity * c)) /
                        (kCartMass + kPoleMass * s * s);
    const double thacc = (kGravity * s - c * xacc) / kLength;
    const double next_xdot = xdot + xacc * kDt;
    const double next_thdot = thdot + thacc * kDt;
    const double delta = next_thdot * kDt;
    if (delta != 0.0) {
      rotate(c, s, delta);
    }
    StateVec out(5);
    out << pos + next_xdot * kDt, c, s, next_xdot, next_thdot;
    return out;
  }
};

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) {
    out(i++) = v;
  }
  return out;
}

Eigen::VectorXd draw_uniform(const EnvSpec& spec, RngStream& rng) {
  Eigen::VectorXd out(spec.init_lo.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out(i) = rng.uniform(spec.init_lo(i), spec.init_hi(i));
  }
  return out;
}

}  // namespace

double decode_angle(double c, double s) { return std::atan2(s, c); }

Environment make_pendulum() {
  Environment env;
  env.model = std::make_shared<PendulumModel>();
  env.spec.name = "pendulum";
  env.spec.n = 3;
  env.spec.m = 1;
  env.spec.dt = PendulumModel::kDt;
  env.spec.T = 100;
  env.spec.box = {vec({-2.0}), vec({2.0})};
  // (th, thdot)
  env.spec.init_lo = vec({-std::numbers::pi, -1.0});
  env.spec.init_hi = vec({std::numbers::pi, 1.0});
  env.cost.state_cost = [](const StateVec& x) {
    const double th = decode_angle(x(0), x(1));
    return th * th + 0.1 * x(2) * x(2);
  };
  env.cost.control_weight = 0.001;
  const EnvSpec spec = env.spec;
  env.sample_initial = [spec](RngStream& rng) {
    const Eigen::VectorXd raw = draw_uniform(spec, rng);
    StateVec x(3);
    x << std::cos(raw(0)), std::sin(raw(0)), raw(1);
    return x;
  };
  return env;
}

Environment make_double_integrator() {
  constexpr double kDt = 0.05;
  Environment env;
  env.model = std::make_shared<DoubleIntegratorModel>(kDt);
  env.spec.name = "double-integrator";
  env.spec.n = 2;
  env.spec.m = 1;
  env.spec.dt = kDt;
  env.spec.T = 100;
  env.spec.box = {vec({-8.0}), vec({8.0})};
  env.spec.init_lo = vec({-1.0, -1.0});
  env.spec.init_hi = vec({1.0, 1.0});
  const QuadraticWeights w = double_integrator_weights();
  env.cost.state_cost = [Q = w.Q](const StateVec& x) { return x.dot(Q * x); };
  env.cost.control_weight = w.R(0, 0);
  const EnvSpec spec = env.spec;
  env.sample_initial = [spec](RngStream& rng) { return StateVec(draw_uniform(spec, rng)); };
  return env;
}

Environment make_cartpole_swingup() {
  Environment env;
  env.model = std::make_shared<CartpoleModel>();
  env.spec.name = "cartpole-swingup";
  env.spec.n = 5;
  env.spec.m = 1;
  env.spec.dt = CartpoleModel::kDt;
  env.spec.T = 100;
  env.spec.box = {vec({-10.0}), vec({10.0})};
  // (x, th, xdot, thdot), hanging down with a small perturbation.
  env.spec.init_lo = vec({-0.1, std::numbers::pi - 0.1, -0.1, -0.1});
  env.spec.init_hi = vec({0.1, std::numbers::pi + 0.1, 0.1, 0.1});
  env.cost.state_cost = [](const StateVec& x) {
    return 2.0 * (1.0 - x(1)) + 0.1 * x(0) * x(0) + 0.01 * x(3) * x(3) + 0.01 * x(4) * x(4);
  };
  env.cost.control_weight = 0.001;
  const EnvSpec spec = env.spec;
  env.sample_initial = [spec](RngStream& rng) {
    const Eigen::VectorXd raw = draw_uniform(spec, rng);
    StateVec x(5);
    x << raw(0), std::cos(raw(1)), std::sin(raw(1)), raw(2), raw(3);
    return x;
  };
  return env;
}

const std::vector<std::string>& env_names() {
  static const std::vector<std::string> names{"pendulum", "double-integrator",
                                              "cartpole-swingup"};
  return names;
}

Environment make_env(const std::string& name) {
  if (name == "pendulum") return make_pendulum();
  if (name == "double-integrator") return make_double_integrator();
  if (name == "cartpole-swingup") return make_cartpole_swingup();
  throw UsageError("unknown environment '" + name + "'");
}

LinearDynamics double_integrator_matrices(double dt) {
  LinearDynamics lin;
  lin.A.resize(2, 2);
  lin.A << 1.0, dt, 0.0, 1.0;
  lin.B.resize(2, 1);
  lin.B << dt * dt, dt;
  return lin;
}

QuadraticWeights double_integrator_weights() {
  QuadraticWeights w;
  w.Q = Eigen::Vector2d(1.0, 0.1).asDiagonal();
  w.R = Eigen::MatrixXd::Constant(1, 1, 0.05);
  return w;
}

double cartpole_energy(const StateVec& x) {
  const double mc = CartpoleModel::kCartMass;
  const double mp = CartpoleModel::kPoleMass;
  const double l = CartpoleModel::kLength;
  const double g = CartpoleModel::kGravity;
  const double c = x(1);
  const double xdot = x(3);
  const double thdot = x(4);
  return 0.5 * (mc + mp) * xdot * xdot + mp * l * c * xdot * thdot +
         0.5 * mp * l * l * thdot * thdot + mp * g * l * c;
}

}  // namespace rhirl
