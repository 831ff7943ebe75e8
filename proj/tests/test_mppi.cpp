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
#include "rhirl/mppi.hpp"

#include <doctest.h>

#include <cmath>

using namespace rhirl;

namespace {

ControllerConfig small_config() {
  ControllerConfig cfg;
  cfg.K = 10;
  cfg.M = 16;
  cfg.lambda = 1.0;
  cfg.beta = 0.5;
  cfg.explore_prob = 0.0;
  return cfg;
}

double quadratic_J(const Environment& env, const StateVec& x0, const ControlSequence& V) {
  const Trajectory tau = rollout(*env.model, x0, V);
  double total = 0.0;
  for (Eigen::Index k = 0; k < V.cols(); ++k) total += env.cost.step_cost(tau.col(k), V.col(k));
  return total + env.cost.state_cost(tau.col(V.cols()));
}

}  // namespace

TEST_CASE("config validation") {
  ControllerConfig cfg = small_config();
  CHECK_NOTHROW(cfg.validate());
  cfg.M = 1;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg = small_config();
  cfg.lambda = 0.0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg = small_config();
  cfg.smoothing.window = 4;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg = small_config();
  cfg.smoothing.order = 5;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg = small_config();
  cfg.K = 0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  // Short horizons run unsmoothed rather than failing.
  cfg = small_config();
  cfg.K = 3;
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("uniform scores give uniform weights") {
  const Eigen::VectorXd w = importance_weights(Eigen::VectorXd::Constant(7, 3.5),
                                               Eigen::VectorXd::Zero(7), 0.7);
  for (int j = 0; j < 7; ++j) CHECK(w(j) == 1.0 / 7.0);
}

TEST_CASE("weights match a long double softmax") {
  const Eigen::Vector3d S(0.0, 1.0, 2.0);
  const Eigen::VectorXd w = importance_weights(S, Eigen::VectorXd::Zero(3), 1.0);
  const long double e[3] = {1.0L, std::exp(-1.0L), std::exp(-2.0L)};
  const long double z = e[0] + e[1] + e[2];
  for (int j = 0; j < 3; ++j) {
    CHECK(std::abs(static_cast<long double>(w(j)) - e[j] / z) < 1e-15L);
  }
  double smin = -1.0;
  importance_weights(S, Eigen::VectorXd::Zero(3), 1.0, &smin);
  CHECK(smin == 0.0);
}

TEST_CASE("weights are invariant to a constant shift in the scores") {
  RngStream rng(11, 0);
  Eigen::VectorXd S(40), c(40);
  for (int j = 0; j < 40; ++j) {
    S(j) = rng.uniform(-50, 50);
    c(j) = rng.uniform(-3, 3);
  }
  const Eigen::VectorXd w = importance_weights(S, c, 2.0);
  for (const double shift : {-1e4, -7.25, 0.5, 1e6}) {
    const Eigen::VectorXd ws =
        importance_weights((S.array() + shift).matrix(), c, 2.0);
    CHECK((ws - w).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK(std::abs(w.sum() - 1.0) < 1e-12);
  CHECK(w.minCoeff() >= 0.0);
}

TEST_CASE("non-finite scores are reported with their index") {
  Eigen::Vector3d S(0.0, NAN, 1.0);
  try {
    importance_weights(S, Eigen::VectorXd::Zero(3), 1.0);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(e.index() == 1);
  }
}

TEST_CASE("weight entropy") {
  CHECK(weight_entropy(Eigen::VectorXd::Constant(4, 0.25)) == doctest::Approx(std::log(4.0)));
  CHECK(weight_entropy(Eigen::Vector3d(1, 0, 0)) == 0.0);
}

TEST_CASE("Savitzky-Golay reproduces low-order polynomials") {
  const SavitzkyGolay sg(5, 2);
  ControlSequence U(2, 12);
  for (int k = 0; k < 12; ++k) {
    U(0, k) = 0.3 - 0.2 * k + 0.05 * k * k;
    U(1, k) = 1.5 + 0.1 * k;
  }
  CHECK((sg.apply(U) - U).cwiseAbs().maxCoeff() < 1e-12);

  // A unit impulse is attenuated in the interior.
  ControlSequence impulse = ControlSequence::Zero(1, 12);
  impulse(0, 6) = 1.0;
  const ControlSequence smoothed = sg.apply(impulse);
  CHECK(smoothed(0, 6) == doctest::Approx(17.0 / 35.0));
  CHECK(smoothed(0, 5) == doctest::Approx(12.0 / 35.0));
  CHECK(smoothed(0, 4) == doctest::Approx(-3.0 / 35.0));
  CHECK(smoothed(0, 0) == 0.0);
}

TEST_CASE("nominal update") {
  const ControlBox box{Eigen::VectorXd::Constant(1, -2.0), Eigen::VectorXd::Constant(1, 2.0)};
  ControllerConfig cfg = small_config();
  cfg.smoothing.enabled = false;
  RolloutBatch batch;
  ControlSequence V(1, 4);
  V << 0.5, -1.0, 1.5, 0.25;
  batch.sequences = {V, -V};
  batch.weights = Eigen::Vector2d(0.5, 0.5);
  CHECK(update_nominal(batch, cfg, box).isZero());

  batch.weights = Eigen::Vector2d(1.0, 0.0);
  CHECK(update_nominal(batch, cfg, box) == V);

  batch.sequences = {V * 4.0, V * 4.0};
  const ControlSequence clamped = update_nominal(batch, cfg, box);
  CHECK(clamped.maxCoeff() == 2.0);
  CHECK(clamped.minCoeff() == -2.0);
}

TEST_CASE("receding shift") {
  ControlSequence U(1, 3);
  U << 1.0, 2.0, 3.0;
  auto [u, next] = receding_step(U);
  CHECK(u(0) == 1.0);
  CHECK(next(0, 0) == 2.0);
  CHECK(next(0, 1) == 3.0);
  CHECK(next(0, 2) == 0.0);

  auto [z, zn] = receding_step(ControlSequence::Zero(2, 4));
  CHECK(z.isZero());
  CHECK(zn.isZero());

  ControlSequence W = ControlSequence::Random(2, 6);
  for (int i = 0; i < 6; ++i) W = receding_step(W).second;
  CHECK(W.isZero());
  CHECK(W.cols() == 6);
}

TEST_CASE("vanishing sampling variance collapses onto the nominal") {
  const Environment env = make_double_integrator();
  ControllerConfig cfg = small_config();
  cfg.M = 2;
  cfg.beta = 1e-14;
  const GroundTruthTrajectoryCost cost(env.cost);
  const ControlSequence nominal = ControlSequence::Constant(1, cfg.K, 0.3);
  const StateVec x = Eigen::Vector2d(1.0, 0.0);
  const RolloutBatch batch =
      evaluate_rollouts(*env.model, x, nominal, cost, cfg, env.spec.box, RngStream(1, 0));
  CHECK(std::abs(batch.state_costs(0) - batch.state_costs(1)) < 1e-6);
}

TEST_CASE("rollout evaluation is deterministic and independent of workers") {
  const Environment env = make_pendulum();
  ControllerConfig cfg = small_config();
  cfg.explore_prob = 0.5;
  const GroundTruthTrajectoryCost cost(env.cost);
  const ControlSequence nominal = ControlSequence::Zero(1, cfg.K);
  const StateVec x = Eigen::Vector3d(-1.0, 0.0, 0.0);
  RolloutBatch a = evaluate_rollouts(*env.model, x, nominal, cost, cfg, env.spec.box, RngStream(5, 0));
  cfg.workers = 4;
  RolloutBatch b = evaluate_rollouts(*env.model, x, nominal, cost, cfg, env.spec.box, RngStream(5, 0));
  CHECK(a.state_costs == b.state_costs);
  CHECK(a.control_terms == b.control_terms);
  for (int j = 0; j < a.size(); ++j) CHECK(a.sequences[j] == b.sequences[j]);
  CHECK(a.env_steps == static_cast<long>(cfg.M) * cfg.K);
  compute_weights(a, cfg);
  CHECK(std::abs(a.weights.sum() - 1.0) < 1e-12);
}

TEST_CASE("control terms pair the clamped sample with the nominal") {
  const Environment env = make_double_integrator();
  ControllerConfig cfg = small_config();
  const ControlSequence nominal = ControlSequence::Constant(1, cfg.K, 0.4);
  const GroundTruthTrajectoryCost cost(env.cost);
  const RolloutBatch batch = evaluate_rollouts(*env.model, Eigen::Vector2d(1, 0), nominal, cost,
                                               cfg, env.spec.box, RngStream(2, 0));
  for (int j = 0; j < batch.size(); ++j) {
    const double expected = (nominal.array() * batch.sequences[j].array()).sum() / cfg.beta;
    CHECK(batch.control_terms(j) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(batch.sequences[j].maxCoeff() <= env.spec.box.hi(0));
    CHECK(batch.sequences[j].minCoeff() >= env.spec.box.lo(0));
  }
}

TEST_CASE("best weighted sample improves on the nominal") {
  // Local search from the controller's reset nominal (all zeros) with a
  // narrow sampling covariance.
  const Environment env = make_double_integrator();
  ControllerConfig cfg = small_config();
  cfg.K = 20;
  cfg.M = 16;
  cfg.lambda = 0.1;
  cfg.beta = 0.05;
  const GroundTruthTrajectoryCost cost(env.cost);
  const ControlSequence nominal = ControlSequence::Zero(1, cfg.K);
  int improved = 0;
  const int trials = 200;
  for (int s = 0; s < trials; ++s) {
    RngStream init(static_cast<std::uint64_t>(s), 9);
    const StateVec x = Eigen::Vector2d(init.uniform(-2, 2), init.uniform(-1, 1));
    RolloutBatch batch =
        evaluate_rollouts(*env.model, x, nominal, cost, cfg, env.spec.box, init.derive({1}));
    compute_weights(batch, cfg);
    Eigen::Index best = 0;
    batch.weights.maxCoeff(&best);
    if (quadratic_J(env, x, batch.sequences[best]) <= quadratic_J(env, x, nominal)) ++improved;
  }
  CHECK(improved >= 0.95 * trials);
}

TEST_CASE("noise-free process model matches the deterministic path") {
  const Environment env = make_double_integrator();
  ControllerConfig cfg = small_config();
  const auto noisy = std::make_shared<ProcessNoiseModel>(env.model, 0.0);
  const GroundTruthTrajectoryCost cost(env.cost);
  const ControlSequence nominal = ControlSequence::Zero(1, cfg.K);
  const StateVec x = Eigen::Vector2d(0.7, -0.2);
  RolloutBatch a = evaluate_rollouts(*env.model, x, nominal, cost, cfg, env.spec.box, RngStream(3, 0));
  RolloutBatch b = evaluate_rollouts(*noisy, x, nominal, cost, cfg, env.spec.box, RngStream(3, 0));
  compute_weights(a, cfg);
  compute_weights(b, cfg);
  CHECK((a.weights - b.weights).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("execution noise") {
  const Environment env = make_double_integrator();
  const StateVec x = Eigen::Vector2d(0, 0);
  const ControlVec u = Eigen::VectorXd::Constant(1, 0.25);
  RngStream rng(4, 0);
  const ExecutedStep exact = execute_control(*env.model, x, u, NoiseSpec::isotropic(0.0, 1),
                                             env.spec.box, rng);
  CHECK(exact.applied == u);
  CHECK(exact.next == step(*env.model, x, u));

  // Sample covariance of the applied control with a wide box.
  const ControlBox wide{Eigen::VectorXd::Constant(1, -1e3), Eigen::VectorXd::Constant(1, 1e3)};
  const NoiseSpec sigma = NoiseSpec::isotropic(0.2, 1);
  double sum = 0.0, sq = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double v = execute_control(*env.model, x, u, sigma, wide, rng).applied(0);
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(var - 0.2) < 0.01);

  RngStream r1(8, 0), r2(8, 0);
  CHECK(execute_control(*env.model, x, u, sigma, env.spec.box, r1).applied ==
        execute_control(*env.model, x, u, sigma, env.spec.box, r2).applied);
}

TEST_CASE("controller drives the double integrator towards the origin") {
  const Environment env = make_double_integrator();
  ControllerConfig cfg;
  cfg.K = 20;
  cfg.M = 64;
  cfg.lambda = 0.16;
  cfg.beta = 1.6;
  cfg.explore_prob = 0.0;
  const GroundTruthTrajectoryCost cost(env.cost, cfg.prior_control_weight());
  const EpisodeResult r = run_episode(*env.model, env.spec.box, cfg, cost, env.cost,
                                      Eigen::Vector2d(1.0, 0.0), 100, NoiseSpec::isotropic(0.0, 1),
                                      RngStream(1, 0));
  CHECK(r.states.cols() == 100);
  CHECK(r.applied.cols() == 100);
  CHECK(r.states.col(99).norm() < 0.1);
  CHECK(r.env_steps == 100L * (cfg.M * cfg.K + 1));
}
