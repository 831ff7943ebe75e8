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

#include "rhirl/cost_model.hpp"
#include "rhirl/demos.hpp"
#include "rhirl/environments.hpp"
#include "rhirl/mppi.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace rhirl {

enum class GradWeighting {
  kSelfNormalized,  // sum_j w_j dS_j
  kAsPrinted,       // (1/M) sum_j w_j dS_j
};

enum class OptimizerKind { kAdam, kSgd };

GradWeighting parse_grad_weighting(const std::string& s);
std::string to_string(GradWeighting w);
OptimizerKind parse_optimizer(const std::string& s);
std::string to_string(OptimizerKind o);

struct TrainConfig {
  std::string env = "pendulum";
  double lr = 1e-4;
  double weight_decay = 8e-5;
  int batch_size = 50;
  int episodes = 15;
  ControllerConfig controller;
  std::vector<int> hidden = {32, 32};
  GradWeighting grad_weighting = GradWeighting::kSelfNormalized;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Execution noise level of the training environment (isotropic).
  double env_noise = 0.0;
  std::uint64_t seed = 0;
  /// Evaluate every this many episodes (0: never).
  int eval_every = 0;
  int eval_episodes = 10;
  /// Decay of the exponential moving average of the parameters that is
  /// returned as the learned cost (0 returns the last iterate).
  double param_ema = 0.0;
  /// Uniform-exploration probability used when evaluating (the learner's
  /// exploration mixture is a training-time sampling device).
  double eval_explore_prob = 0.0;

  void validate() const;
  /// Controller used for evaluation runs.
  ControllerConfig eval_controller() const;
};

/// Expert state windows starting at demo time t, all of the same length.
struct DemoWindowBatch {
  int t = 0;
  std::vector<Trajectory> windows;

  int size() const { return static_cast<int>(windows.size()); }
  int length() const { return windows.empty() ? 0 : static_cast<int>(windows.front().cols()); }
};

/// Windows x_t .. x_{min(t+K, T-1)} of `batch_size` demos: drawn without
/// replacement when there are enough demos, with replacement otherwise.
DemoWindowBatch extract_windows(const DemoSet& demos, int t, int K, int batch_size,
                                RngStream& rng);

/// Loss gradient for one time step:
///   (1/N) sum_i (1/lambda) dS(window_i) - sum_j c_j (1/lambda) dS(V_j)
/// with c_j = w_j (self-normalized) or w_j / M (as printed). Rollouts are
/// truncated to the window length; stochastic samples are averaged.
Eigen::VectorXd estimate_gradient(const CostParams& params, const DemoWindowBatch& windows,
                                  const RolloutBatch& batch, double lambda,
                                  GradWeighting weighting = GradWeighting::kSelfNormalized);

struct OptimizerState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::int64_t step = 0;
};

/// One optimizer step with decoupled weight decay. Adam moments live in `state`.
CostParams apply_update(const CostParams& params, const Eigen::VectorXd& grad,
                        const TrainConfig& cfg, OptimizerState& state);

/// Per-episode metrics. grad_norm, s_min and weight_entropy are means over the episode's steps.
struct MetricsRow {
  int episode = 0;
  std::int64_t env_steps = 0;
  double train_return = 0.0;
  std::optional<double> eval_return;
  std::optional<double> eval_ratio;
  double grad_norm = 0.0;
  double s_min = 0.0;
  double weight_entropy = 0.0;
};

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows);
void write_metrics_jsonl(const std::string& path, const std::vector<MetricsRow>& rows);

struct TrainResult {
  /// The learned cost: the parameter average, or the last iterate without averaging.
  CostParams params;
  CostParams iterate;
  /// Bias-uncorrected moving average of the iterates (empty without averaging).
  Eigen::VectorXd average;
  OptimizerState optimizer;
  std::vector<MetricsRow> metrics;
  std::int64_t env_steps = 0;
  int episodes_done = 0;
  std::string env;
  std::uint64_t seed = 0;
  double param_ema = 0.0;

  Checkpoint checkpoint() const;
};

struct TrainOptions {
  /// Continue from this state instead of a fresh initialisation.
  const Checkpoint* resume = nullptr;
  /// Where the last good state is saved before a numeric failure propagates.
  std::string failure_checkpoint;
  /// Called after every finished episode.
  std::function<void(const MetricsRow&)> on_episode;
  int workers = 1;
};

/// Training failed numerically at (episode, t). The last good state has been saved if requested.
class TrainingError : public NumericError {
 public:
  TrainingError(const std::string& what, int episode, int t)
      : NumericError(what + " at episode " + std::to_string(episode) + ", t=" +
                         std::to_string(t),
                     t),
        episode_(episode),
        t_(t) {}
  int episode() const noexcept { return episode_; }
  int t() const noexcept { return t_; }

 private:
  int episode_;
  int t_;
};

/// Receding-horizon IRL: one gradient step per environment step.
TrainResult train(const TrainConfig& cfg, const DemoSet& demos, const TrainOptions& opts = {});

}  // namespace rhirl
