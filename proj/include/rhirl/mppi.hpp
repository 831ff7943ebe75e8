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
#include "rhirl/cost_model.hpp"

#include <utility>
#include <vector>

/**
 * \file
 * \brief Sampling-based receding-horizon control (MPPI) under a given
 * trajectory cost: rollout evaluation, importance weights, nominal update
 * and the receding shift.
 */

namespace rhirl {

struct SmoothingConfig {
  bool enabled = true;
  int window = 5;
  int order = 2;
};

struct ControllerConfig {
  int K = 20;
  int M = 64;
  double lambda = 0.1;
  /// Learner's stand-in covariance beta * I for sampling and the control term.
  double beta = 0.8;
  double explore_prob = 0.5;
  SmoothingConfig smoothing;
  /// Noisy rollouts per sampled sequence on stochastic models (M^s).
  int stochastic_samples = 1;
  /// Upper bound on rollout worker threads. Results do not depend on it.
  int workers = 1;

  /// Throws UsageError describing the first violated constraint.
  void validate() const;
  NoiseSpec sampling_noise() const { return NoiseSpec::beta_identity(beta); }
  /// Quadratic control weight lambda / (2 beta) implied by the sampling prior.
  double prior_control_weight() const { return lambda / (2.0 * beta); }
};

/// M sampled sequences with their rollouts and scores, co-indexed.
struct RolloutBatch {
  std::vector<ControlSequence> sequences;
  /// trajectories[j][h]: h-th rollout of sequence j (one per sequence for
  /// deterministic models, M^s for stochastic ones).
  std::vector<std::vector<Trajectory>> trajectories;
  /// S(V_j) (or its Monte-Carlo expectation), plus any control penalty of the cost model.
  Eigen::VectorXd state_costs;
  /// sum_k u_k' Sigma_eff^-1 v_k against the pre-update nominal.
  Eigen::VectorXd control_terms;
  Eigen::VectorXd weights;
  double s_min = 0.0;
  /// Dynamics steps spent producing this batch.
  long env_steps = 0;

  int size() const { return static_cast<int>(sequences.size()); }
};

/// Sample M sequences around `nominal` and score their rollouts from `x`.
/// Sequence j draws from rng.derive({j}).
RolloutBatch evaluate_rollouts(const DynamicsModel& model, const StateVec& x,
                               const ControlSequence& nominal, const TrajectoryCostModel& cost,
                               const ControllerConfig& cfg, const ControlBox& box,
                               const RngStream& rng);

/// Fill batch.weights with w_j ~ exp(-(S_j - S_min)/lambda - c_j), normalised.
void compute_weights(RolloutBatch& batch, const ControllerConfig& cfg);

/// Normalised importance weights for raw scores; the building block of compute_weights.
Eigen::VectorXd importance_weights(const Eigen::VectorXd& state_costs,
                                   const Eigen::VectorXd& control_terms, double lambda,
                                   double* s_min = nullptr);

/// Shannon entropy (nats) of a normalised weight vector.
double weight_entropy(const Eigen::VectorXd& weights);

/// Savitzky-Golay smoother along the time axis as a K x K linear operator.
/// Edge samples use the polynomial fitted to the first/last full window, so
/// any polynomial of degree <= order passes through unchanged.
class SavitzkyGolay {
 public:
  SavitzkyGolay(int window, int order);
  /// Operator S with smoothed = U * S^T for an m x K sequence U.
  Eigen::MatrixXd operator_matrix(int length) const;
  ControlSequence apply(const ControlSequence& U) const;

 private:
  int window_;
  int order_;
};

/// U = sum_j w_j V_j, optionally smoothed, clamped to the box.
ControlSequence update_nominal(const RolloutBatch& batch, const ControllerConfig& cfg,
                               const ControlBox& box);

/// First control and the sequence shifted left with a zero appended.
std::pair<ControlVec, ControlSequence> receding_step(const ControlSequence& U);

struct ExecutedStep {
  ControlVec applied;  // v after noise and clamping
  StateVec next;
};

/// Apply u under the environment's true control noise: v ~ N(u, Sigma_true), clamped.
ExecutedStep execute_control(const DynamicsModel& model, const StateVec& x, const ControlVec& u,
                             const NoiseSpec& true_noise, const ControlBox& box,
                             RngStream& rng);

/// One receding-horizon controller: keeps the nominal sequence between steps.
class MppiController {
 public:
  MppiController(ModelPtr model, ControlBox box, ControllerConfig cfg);

  void reset();
  /// evaluate_rollouts + compute_weights + update_nominal at state x.
  /// Returns the weighted batch; the updated nominal is available via nominal().
  RolloutBatch optimize(const StateVec& x, const TrajectoryCostModel& cost, const RngStream& rng);
  /// Pop the first nominal control and shift.
  ControlVec pop_control();

  const ControlSequence& nominal() const noexcept { return nominal_; }
  void set_nominal(ControlSequence U) { nominal_ = std::move(U); }
  const ControllerConfig& config() const noexcept { return cfg_; }
  const ControlBox& box() const noexcept { return box_; }
  const DynamicsModel& model() const { return *model_; }

 private:
  ModelPtr model_;
  ControlBox box_;
  ControllerConfig cfg_;
  ControlSequence nominal_;
};

/// Result of one closed-loop episode.
struct EpisodeResult {
  Trajectory states;          // x_0 .. x_{T-1}
  ControlSequence applied;    // v_0 .. v_{T-1}
  double ground_truth_return = 0.0;  // -sum_t c(x_t, v_t)
  long env_steps = 0;         // rollout steps + executed steps
};

/// Run MPPI under `cost` for T steps from `x0` with execution noise `true_noise`.
/// Step t plans with rng.derive({0, t}) and executes with rng.derive({1, t}).
EpisodeResult run_episode(const DynamicsModel& model, const ControlBox& box,
                          const ControllerConfig& cfg, const TrajectoryCostModel& cost,
                          const GroundTruthCost& truth, const StateVec& x0, int T,
                          const NoiseSpec& true_noise, const RngStream& rng);

}  // namespace rhirl
