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
#include "rhirl/environments.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rhirl {

/// Parameters of the learnable state cost g(x; theta): a fully connected
/// network with rectifier hidden layers and a scalar linear output.
///
/// Storage is one flat vector. Layer l occupies W_l (out x in, column-major)
/// followed by b_l (out).
class CostParams {
 public:
  CostParams() = default;

  /// All-zero network with layer widths {input, hidden..., 1}.
  static CostParams zeros(int input_dim, const std::vector<int>& hidden);
  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias.
  static CostParams init(int input_dim, const std::vector<int>& hidden, RngStream& rng);
  /// Rebuild from explicit widths and a flat vector; FormatError on size mismatch.
  static CostParams from_flat(std::vector<int> widths, Eigen::VectorXd flat);

  const std::vector<int>& widths() const noexcept { return widths_; }
  int input_dim() const { return widths_.empty() ? 0 : widths_.front(); }
  int num_layers() const { return static_cast<int>(widths_.size()) - 1; }
  Eigen::Index size() const noexcept { return flat_.size(); }

  const Eigen::VectorXd& flat() const noexcept { return flat_; }
  Eigen::VectorXd& flat() noexcept { return flat_; }

  Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
  Eigen::Map<Eigen::MatrixXd> weight(int layer);
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;
  Eigen::Map<Eigen::VectorXd> bias(int layer);

  /// Offset of layer `layer`'s weight block in the flat vector.
  Eigen::Index weight_offset(int layer) const { return offsets_.at(layer); }
  Eigen::Index bias_offset(int layer) const;

  bool same_shape(const CostParams& other) const { return widths_ == other.widths_; }

 private:
  explicit CostParams(std::vector<int> widths);
  std::vector<int> widths_;
  std::vector<Eigen::Index> offsets_;
  Eigen::VectorXd flat_;
};

/// g(x) with its parameter gradient.
struct CostEval {
  double value = 0.0;
  Eigen::VectorXd grad;
};

double g(const CostParams& params, const StateVec& x);
CostEval g_backward(const CostParams& params, const StateVec& x);

/// g at every column of `states`.
Eigen::VectorXd g_batch(const CostParams& params, const Eigen::MatrixXd& states);

/// sum_c coeff(c) * dg(states.col(c))/dtheta, one backward pass over the batch.
Eigen::VectorXd g_weighted_grad(const CostParams& params, const Eigen::MatrixXd& states,
                                const Eigen::VectorXd& coeff);

/// Compensated (Kahan-Babuska) sum.
double compensated_sum(const Eigen::VectorXd& values);

/// S(tau) = sum over every state of g. The controls that produced tau are not used.
double state_cost_S(const CostParams& params, const Trajectory& tau);
/// As above, additionally requiring tau to hold K+1 states.
double state_cost_S(const CostParams& params, const Trajectory& tau, int horizon);

/// J = S(tau) + (lambda/2) sum_k u_k' Sigma_eff^-1 u_k.
double total_cost_J(const CostParams& params, const Trajectory& tau, const ControlSequence& U,
                    const NoiseSpec& noise, double lambda);

/// Monte-Carlo expected state cost over `samples` noisy rollouts of V from x0.
/// Sample h uses rng.derive({h}). Deterministic models return S of the single rollout.
double expected_state_cost(const CostParams& params, const DynamicsModel& model,
                           const StateVec& x0, const ControlSequence& V, int samples,
                           const RngStream& rng);

/// Cost that scores sampled rollouts inside the controller.
class TrajectoryCostModel {
 public:
  virtual ~TrajectoryCostModel() = default;
  /// Per-state costs of every column of `states`.
  virtual Eigen::VectorXd state_costs(const Eigen::MatrixXd& states) const = 0;
  /// Additional cost charged on the applied controls (zero for learned costs).
  virtual double control_penalty(const ControlSequence& /*V*/) const { return 0.0; }
};

/// The learned g(x; theta). Holds a reference; the params must outlive it.
class LearnedCost final : public TrajectoryCostModel {
 public:
  explicit LearnedCost(const CostParams& params) : params_(params) {}
  Eigen::VectorXd state_costs(const Eigen::MatrixXd& states) const override {
    return g_batch(params_, states);
  }
  const CostParams& params() const noexcept { return params_; }

 private:
  const CostParams& params_;
};

/// Ground-truth task cost for an MPPI expert.
///
/// The sampling prior N(0, beta I) already charges (lambda / 2beta)|v|^2 per
/// control, so only the remainder of the task's control weight is added
/// explicitly: penalty = (r - prior_weight) |v|^2. Pass prior_weight = 0 to
/// charge the full task penalty.
class GroundTruthTrajectoryCost final : public TrajectoryCostModel {
 public:
  explicit GroundTruthTrajectoryCost(GroundTruthCost cost, double prior_weight = 0.0)
      : cost_(std::move(cost)), penalty_(cost_.control_weight - prior_weight) {}
  Eigen::VectorXd state_costs(const Eigen::MatrixXd& states) const override;
  double control_penalty(const ControlSequence& V) const override {
    return penalty_ * V.squaredNorm();
  }

 private:
  GroundTruthCost cost_;
  double penalty_;
};

/// Serialized training state. Optimizer moments are empty for a fresh model.
struct Checkpoint {
  std::string env;
  CostParams params;
  std::int64_t training_step = 0;
  std::int64_t episodes_done = 0;
  std::uint64_t seed = 0;
  Eigen::VectorXd adam_m;
  Eigen::VectorXd adam_v;
  std::int64_t env_steps = 0;
  /// Running parameter average of the trainer (empty when not averaging).
  Eigen::VectorXd param_average;
  double param_ema = 0.0;

  /// The cost to deploy: the bias-corrected average when present, else params.
  CostParams learned() const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
/// FormatError on unreadable, truncated or inconsistent files.
Checkpoint load_checkpoint(const std::string& path);

void save_params(const std::string& path, const std::string& env, const CostParams& params,
                 std::int64_t training_step = 0, std::uint64_t seed = 0);
/// Loads and checks the stored environment and layer widths against the expected ones.
CostParams load_params(const std::string& path, const std::string& env,
                       const std::vector<int>& expected_widths);

}  // namespace rhirl
