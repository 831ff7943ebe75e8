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

#include "rhirl/mppi.hpp"

#include "parallel.hpp"

#include <cmath>
#include <limits>

namespace rhirl {

void ControllerConfig::validate() const {
  if (K < 1) throw UsageError("controller K must be >= 1");
  if (M < 2) throw UsageError("controller M must be >= 2");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw UsageError("lambda must be > 0");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw UsageError("beta must be > 0");
  if (!(explore_prob >= 0.0 && explore_prob <= 1.0)) {
    throw UsageError("explore_prob must lie in [0, 1]");
  }
  if (smoothing.enabled) {
    if (smoothing.window < 1 || smoothing.window % 2 == 0) {
      throw UsageError("smoothing window must be odd and positive");
    }
    if (smoothing.order < 0 || smoothing.order >= smoothing.window) {
      throw UsageError("smoothing order must be in [0, window)");
    }
  }
  if (stochastic_samples < 1) throw UsageError("stochastic_samples must be >= 1");
  if (workers < 1) throw UsageError("workers must be >= 1");
}

RolloutBatch evaluate_rollouts(const DynamicsModel& model, const StateVec& x,
                               const ControlSequence& nominal, const TrajectoryCostModel& cost,
                               const ControllerConfig& cfg, const ControlBox& box,
                               const RngStream& rng) {
  if (nominal.cols() != cfg.K || nominal.rows() != model.control_dim()) {
    throw UsageError("nominal sequence must be m x K");
  }
  const int M = cfg.M;
  const bool noisy = model.stochastic();
  const int samples = noisy ? cfg.stochastic_samples : 1;
  const NoiseSpec noise = cfg.sampling_noise();
  const Eigen::MatrixXd precision = noise.precision(model.control_dim());
  const Eigen::MatrixXd weighted_nominal = precision * nominal;  // Sigma^-1 u_k per column

  RolloutBatch batch;
  batch.sequences.resize(M);
  batch.trajectories.resize(M);
  batch.state_costs.resize(M);
  batch.control_terms.resize(M);

  detail::parallel_for(M, cfg.workers, [&](int j) {
    RngStream stream = rng.derive({static_cast<std::uint64_t>(j)});
    ControlSequence V = sample_control_sequence(nominal, noise, box, cfg.explore_prob, stream);
    std::vector<Trajectory> taus;
    taus.reserve(samples);
    Eigen::VectorXd sample_costs(samples);
    try {
      for (int h = 0; h < samples; ++h) {
        if (noisy) {
          RngStream sub = stream.derive({static_cast<std::uint64_t>(h)});
          taus.push_back(rollout(model, x, V, &sub));
        } else {
          taus.push_back(rollout(model, x, V));
        }
        sample_costs(h) = compensated_sum(cost.state_costs(taus.back()));
      }
    } catch (const NumericError& e) {
      throw NumericError(std::string("rollout failed: ") + e.what(), j);
    }
    batch.state_costs(j) = compensated_sum(sample_costs) / samples + cost.control_penalty(V);
    batch.control_terms(j) = (weighted_nominal.array() * V.array()).sum();
    batch.sequences[j] = std::move(V);
    batch.trajectories[j] = std::move(taus);
  });
  batch.env_steps = static_cast<long>(M) * samples * cfg.K;
  return batch;
}

Eigen::VectorXd importance_weights(const Eigen::VectorXd& state_costs,
                                   const Eigen::VectorXd& control_terms, double lambda,
                                   double* s_min) {
  if (state_costs.size() != control_terms.size() || state_costs.size() == 0) {
    throw UsageError("importance_weights needs co-indexed, non-empty inputs");
  }
  for (Eigen::Index j = 0; j < state_costs.size(); ++j) {
    if (!std::isfinite(state_costs(j)) || !std::isfinite(control_terms(j))) {
      throw NumericError("rollout score is not finite", static_cast<long>(j));
    }
  }
  const double smin = state_costs.minCoeff();
  if (s_min != nullptr) {
    *s_min = smin;
  }
  Eigen::VectorXd exponent = -(state_costs.array() - smin) / lambda - control_terms.array();
  // The control term is not bounded by the S_min shift; shifting by the max
  // exponent keeps exp() in range without changing the normalised result.
  exponent.array() -= exponent.maxCoeff();
  // Below this exp() returns subnormals, which are slow in every later
  // product and carry no weight at double precision anyway.
  constexpr double kFlush = -700.0;
  Eigen::VectorXd w = (exponent.array() < kFlush).select(0.0, exponent.array().exp());
  const double total = w.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw NumericError("importance weights underflowed", 0);
  }
  w /= total;
  return w;
}

void compute_weights(RolloutBatch& batch, const ControllerConfig& cfg) {
  batch.weights = importance_weights(batch.state_costs, batch.control_terms, cfg.lambda,
                                     &batch.s_min);
  const double total = batch.weights.sum();
  if (std::abs(total - 1.0) > 1e-12) {
    throw NumericError("importance weights do not sum to one", 0);
  }
}

double weight_entropy(const Eigen::VectorXd& weights) {
  double h = 0.0;
  for (Eigen::Index j = 0; j < weights.size(); ++j) {
    if (weights(j) > 0.0) {
      h -= weights(j) * std::log(weights(j));
    }
  }
  return h;
}

SavitzkyGolay::SavitzkyGolay(int window, int order) : window_(window), order_(order) {
  if (window < 1 || window % 2 == 0) throw UsageError("Savitzky-Golay window must be odd");
  if (order < 0 || order >= window) throw UsageError("Savitzky-Golay order must be < window");
}

Eigen::MatrixXd SavitzkyGolay::operator_matrix(int length) const {
  if (length < window_) {
    return Eigen::MatrixXd::Identity(length, length);
  }
  const int half = window_ / 2;
  // Least-squares fit over positions -half..half: coefficients = H * samples.
  Eigen::MatrixXd vander(window_, order_ + 1);
  for (int i = 0; i < window_; ++i) {
    for (int p = 0; p <= order_; ++p) {
      vander(i, p) = std::pow(static_cast<double>(i - half), p);
    }
  }
  const Eigen::MatrixXd fit =
      (vander.transpose() * vander).ldlt().solve(vander.transpose());  // (order+1) x window
  auto eval_row = [&](double pos) {
    Eigen::RowVectorXd basis(order_ + 1);
    for (int p = 0; p <= order_; ++p) {
      basis(p) = std::pow(pos, p);
    }
    return Eigen::RowVectorXd(basis * fit);
  };
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(length, length);
  const Eigen::RowVectorXd centre = eval_row(0.0);
  for (int i = 0; i < length; ++i) {
    if (i < half) {
      S.block(i, 0, 1, window_) = eval_row(static_cast<double>(i - half));
    } else if (i >= length - half) {
      S.block(i, length - window_, 1, window_) =
          eval_row(static_cast<double>(i - (length - 1 - half)));
    } else {
      S.block(i, i - half, 1, window_) = centre;
    }
  }
  return S;
}

ControlSequence SavitzkyGolay::apply(const ControlSequence& U) const {
  return U * operator_matrix(static_cast<int>(U.cols())).transpose();
}

ControlSequence update_nominal(const RolloutBatch& batch, const ControllerConfig& cfg,
                               const ControlBox& box) {
  if (batch.weights.size() != batch.size() || batch.size() == 0) {
    throw UsageError("update_nominal needs a weighted batch");
  }
  ControlSequence U = ControlSequence::Zero(batch.sequences[0].rows(), batch.sequences[0].cols());
  for (int j = 0; j < batch.size(); ++j) {
    U += batch.weights(j) * batch.sequences[j];
  }
  if (cfg.smoothing.enabled && U.cols() >= cfg.smoothing.window) {
    U = SavitzkyGolay(cfg.smoothing.window, cfg.smoothing.order).apply(U);
  }
  box.clamp_in_place(U);
  return U;
}

std::pair<ControlVec, ControlSequence> receding_step(const ControlSequence& U) {
  if (U.cols() == 0) {
    throw UsageError("receding_step on an empty sequence");
  }
  ControlSequence next = ControlSequence::Zero(U.rows(), U.cols());
  next.leftCols(U.cols() - 1) = U.rightCols(U.cols() - 1);
  return {U.col(0), std::move(next)};
}

ExecutedStep execute_control(const DynamicsModel& model, const StateVec& x, const ControlVec& u,
                             const NoiseSpec& true_noise, const ControlBox& box,
                             RngStream& rng) {
  ExecutedStep out;
  out.applied = true_noise.is_zero() ? u : true_noise.sample(u, rng);
  out.applied = box.clamp(out.applied);
  out.next = model.stochastic() ? step_stochastic(model, x, out.applied, rng)
                                : step(model, x, out.applied);
  return out;
}

MppiController::MppiController(ModelPtr model, ControlBox box, ControllerConfig cfg)
    : model_(std::move(model)), box_(std::move(box)), cfg_(cfg) {
  cfg_.validate();
  if (box_.dim() != model_->control_dim()) {
    throw UsageError("control box dimension does not match the model");
  }
  reset();
}

void MppiController::reset() { nominal_ = ControlSequence::Zero(model_->control_dim(), cfg_.K); }

RolloutBatch MppiController::optimize(const StateVec& x, const TrajectoryCostModel& cost,
                                      const RngStream& rng) {
  RolloutBatch batch = evaluate_rollouts(*model_, x, nominal_, cost, cfg_, box_, rng);
  compute_weights(batch, cfg_);
  nominal_ = update_nominal(batch, cfg_, box_);
  return batch;
}

ControlVec MppiController::pop_control() {
  auto [u, next] = receding_step(nominal_);
  nominal_ = std::move(next);
  return u;
}

EpisodeResult run_episode(const DynamicsModel& model, const ControlBox& box,
                          const ControllerConfig& cfg, const TrajectoryCostModel& cost,
                          const GroundTruthCost& truth, const StateVec& x0, int T,
                          const NoiseSpec& true_noise, const RngStream& rng) {
  if (T < 1) {
    throw UsageError("episode length must be >= 1");
  }
  cfg.validate();
  EpisodeResult out;
  out.states.resize(model.state_dim(), T);
  out.applied.resize(model.control_dim(), T);
  ControlSequence nominal = ControlSequence::Zero(model.control_dim(), cfg.K);
  StateVec x = x0;
  double cost_sum = 0.0;
  for (int t = 0; t < T; ++t) {
    out.states.col(t) = x;
    const auto key = static_cast<std::uint64_t>(t);
    RolloutBatch batch = evaluate_rollouts(model, x, nominal, cost, cfg, box, rng.derive({0, key}));
    compute_weights(batch, cfg);
    nominal = update_nominal(batch, cfg, box);
    auto [u, shifted] = receding_step(nominal);
    nominal = std::move(shifted);
    RngStream exec_rng = rng.derive({1, key});
    ExecutedStep step_out = execute_control(model, x, u, true_noise, box, exec_rng);
    out.applied.col(t) = step_out.applied;
    cost_sum += truth.step_cost(x, step_out.applied);
    out.env_steps += batch.env_steps + 1;
    x = std::move(step_out.next);
  }
  out.ground_truth_return = -cost_sum;
  return out;
}

}  // namespace rhirl
