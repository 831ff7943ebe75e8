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

#include <Eigen/Dense>

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>

/**
 * \file
 * \brief States, controls, control noise, random streams and the black-box
 * dynamics contract shared by the environments and the controller.
 */

namespace rhirl {

using StateVec = Eigen::VectorXd;
using ControlVec = Eigen::VectorXd;

/// Column k holds the control applied at step k (m x K).
using ControlSequence = Eigen::MatrixXd;

/// Column k holds state x_k (n x length).
using Trajectory = Eigen::MatrixXd;

// Error taxonomy. The CLI maps these onto exit codes.

/// Caller violated a precondition (dimensions, ranges, configuration).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation produced a non-finite value. `index` locates it
/// (trajectory step, rollout or parameter component depending on the site).
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, long index)
      : std::runtime_error(what + " (index " + std::to_string(index) + ")"), index_(index) {}
  long index() const noexcept { return index_; }

 private:
  long index_;
};

/// Malformed or mismatched file contents.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Deterministic random stream keyed by (seed, stream id).
///
/// Child streams are derived by hashing extra keys into the stream id, so a
/// rollout's draws depend only on (run seed, iteration, rollout index) and not
/// on which worker evaluates it.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// A new independent stream keyed by this stream and `keys`.
  RngStream derive(std::initializer_list<std::uint64_t> keys) const;

  double normal();
  double uniform(double lo, double hi);
  std::size_t uniform_index(std::size_t n);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Admissible control box, per-dimension [lo, hi].
struct ControlBox {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  int dim() const { return static_cast<int>(lo.size()); }
  Eigen::VectorXd center() const { return 0.5 * (lo + hi); }
  ControlVec clamp(const ControlVec& v) const { return v.cwiseMax(lo).cwiseMin(hi); }
  void clamp_in_place(ControlSequence& seq) const;
  bool contains(const ControlVec& v) const;
};

/// Gaussian control noise: either a known covariance (used to simulate the
/// environment) or the learner's isotropic stand-in beta * I.
class NoiseSpec {
 public:
  enum class Kind { kTrueSigma, kBetaIdentity };

  static NoiseSpec true_sigma(Eigen::MatrixXd sigma);
  /// Isotropic true covariance `level * I` in `m` dimensions.
  static NoiseSpec isotropic(double level, int m);
  static NoiseSpec beta_identity(double beta);

  Kind kind() const noexcept { return kind_; }
  double beta() const noexcept { return beta_; }

  /// Effective covariance in m dimensions.
  Eigen::MatrixXd covariance(int m) const;
  /// Inverse of the effective covariance; throws UsageError when singular.
  Eigen::MatrixXd precision(int m) const;
  /// Draw v ~ N(mean, covariance).
  ControlVec sample(const ControlVec& mean, RngStream& rng) const;
  /// True when every draw equals the mean.
  bool is_zero() const;

 private:
  NoiseSpec() = default;
  Kind kind_ = Kind::kBetaIdentity;
  double beta_ = 1.0;
  Eigen::MatrixXd sigma_;
  Eigen::MatrixXd factor_;  // sigma = factor * factor^T
};

/// Black-box resettable dynamics x_{t+1} = f(x_t, v_t [, w_t]).
///
/// Implementations are immutable after construction so one instance can be
/// shared by concurrent rollout workers.
class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;

  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;
  virtual double dt() const = 0;
  virtual bool stochastic() const { return false; }

  /// Noise-free successor. For stochastic models this is f(x, v, 0).
  virtual StateVec next_state(const StateVec& x, const ControlVec& v) const = 0;

  /// Successor with a process-noise draw. Only meaningful for stochastic models.
  virtual StateVec next_state_noisy(const StateVec& x, const ControlVec& v, RngStream& rng) const;
};

using ModelPtr = std::shared_ptr<const DynamicsModel>;

/// Deterministic model f(x, v) plus additive Gaussian process noise
/// w ~ N(0, scale^2 I) on the successor state.
class ProcessNoiseModel final : public DynamicsModel {
 public:
  ProcessNoiseModel(ModelPtr base, double scale);

  int state_dim() const override { return base_->state_dim(); }
  int control_dim() const override { return base_->control_dim(); }
  double dt() const override { return base_->dt(); }
  bool stochastic() const override { return true; }
  double scale() const noexcept { return scale_; }

  StateVec next_state(const StateVec& x, const ControlVec& v) const override;
  StateVec next_state_noisy(const StateVec& x, const ControlVec& v, RngStream& rng) const override;

 private:
  ModelPtr base_;
  double scale_;
};

/// Checked deterministic step. `v` must already lie in the control box.
StateVec step(const DynamicsModel& model, const StateVec& x, const ControlVec& v);

/// Checked stochastic step; UsageError on a deterministic model.
StateVec step_stochastic(const DynamicsModel& model, const StateVec& x, const ControlVec& v,
                         RngStream& rng);

/// Roll `controls` out from `x0`; returns K+1 states. Pass `rng` to draw
/// process noise on a stochastic model, nullptr for the noise-free path.
Trajectory rollout(const DynamicsModel& model, const StateVec& x0, const ControlSequence& controls,
                   RngStream* rng = nullptr);

/// Draw one control sequence around `nominal`.
///
/// With probability `explore_prob` the whole sequence is drawn uniformly from
/// the control box, otherwise each column is drawn from N(u_k, noise). The
/// result is clamped to `box`.
ControlSequence sample_control_sequence(const ControlSequence& nominal, const NoiseSpec& noise,
                                        const ControlBox& box, double explore_prob,
                                        RngStream& rng);

/// Throws NumericError naming the first non-finite column.
void require_finite(const Eigen::MatrixXd& m, const char* what);

}  // namespace rhirl
