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

#include "rhirl/environments.hpp"

#include <Eigen/Dense>

#include <vector>

namespace rhirl::testing {

// Finite-horizon discrete LQR by backward Riccati recursion. Stage costs
// x'Qx + u'Ru for t = 0..T-1, no terminal cost.
struct FiniteLqr {
  std::vector<Eigen::MatrixXd> gains;  // u_t = -gains[t] x_t
  Eigen::MatrixXd P0;                  // optimal cost-to-go at t = 0

  FiniteLqr(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
            const Eigen::MatrixXd& R, int T)
      : gains(T) {
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(A.rows(), A.rows());
    for (int t = T - 1; t >= 0; --t) {
      const Eigen::MatrixXd S = R + B.transpose() * P * B;
      const Eigen::MatrixXd K = S.ldlt().solve(B.transpose() * P * A);
      P = Q + A.transpose() * P * (A - B * K);
      P = 0.5 * (P + P.transpose());
      gains[t] = K;
    }
    P0 = P;
  }

  double cost(const Eigen::VectorXd& x0) const { return x0.dot(P0 * x0); }
};

inline FiniteLqr double_integrator_lqr(int T) {
  const LinearDynamics lin = double_integrator_matrices(make_double_integrator().spec.dt);
  const QuadraticWeights w = double_integrator_weights();
  return FiniteLqr(lin.A, lin.B, w.Q, w.R, T);
}

}  // namespace rhirl::testing
