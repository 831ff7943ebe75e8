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

#include "rhirl/core.hpp"

#include <cmath>

namespace rhirl {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream_id) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(stream_id + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(make_engine(seed, stream_id)) {}

RngStream RngStream::derive(std::initializer_list<std::uint64_t> keys) const {
  std::uint64_t id = splitmix64(stream_id_);
  for (std::uint64_t k : keys) {
    id = splitmix64(id ^ splitmix64(k + 0x2545f4914f6cdd1dULL));
  }
  return RngStream(seed_, id);
}

double RngStream::normal() { return normal_(engine_); }

double RngStream::uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

std::size_t RngStream::uniform_index(std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

void ControlBox::clamp_in_place(ControlSequence& seq) const {
  for (Eigen::Index k = 0; k < seq.cols(); ++k) {
    seq.col(k) = seq.col(k).cwiseMax(lo).cwiseMin(hi);
  }
}

bool ControlBox::contains(const ControlVec& v) const {
  return v.size() == lo.size() && (v.array() >= lo.array()).all() &&
         (v.array() <= hi.array()).all();
}

NoiseSpec NoiseSpec::true_sigma(Eigen::MatrixXd sigma) {
  if (sigma.rows() != sigma.cols()) {
    throw UsageError("noise covariance must be square");
  }
  if (!sigma.isApprox(sigma.transpose(), 1e-12) && !sigma.isZero()) {
    throw UsageError("noise covariance must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
  if (eig.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, sigma.norm())) {
    throw UsageError("noise covariance must be positive semidefinite");
  }
  NoiseSpec spec;
  spec.kind_ = Kind::kTrueSigma;
  spec.factor_ = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  spec.sigma_ = std::move(sigma);
  return spec;
}

NoiseSpec NoiseSpec::isotropic(double level, int m) {
  if (!(level >= 0.0) || !std::isfinite(level)) {
    throw UsageError("noise level must be finite and non-negative");
  }
  return true_sigma(level * Eigen::MatrixXd::Identity(m, m));
}

NoiseSpec NoiseSpec::beta_identity(double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw UsageError("beta must be positive");
  }
  NoiseSpec spec;
  spec.kind_ = Kind::kBetaIdentity;
  spec.beta_ = beta;
  return spec;
}

Eigen::MatrixXd NoiseSpec::covariance(int m) const {
  if (kind_ == Kind::kBetaIdentity) {
    return beta_ * Eigen::MatrixXd::Identity(m, m);
  }
  if (sigma_.rows() != m) {
    throw UsageError("noise covariance dimension does not match control dimension");
  }
  return sigma_;
}

Eigen::MatrixXd NoiseSpec::precision(int m) const {
  if (kind_ == Kind::kBetaIdentity) {
    return Eigen::MatrixXd::Identity(m, m) / beta_;
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(covariance(m));
  if (!lu.isInvertible()) {
    throw UsageError("noise covariance is singular");
  }
  return lu.inverse();
}

ControlVec NoiseSpec::sample(const ControlVec& mean, RngStream& rng) const {
  const Eigen::Index m = mean.size();
  Eigen::VectorXd z(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    z(i) = rng.normal();
  }
  if (kind_ == Kind::kBetaIdentity) {
    return mean + std::sqrt(beta_) * z;
  }
  if (factor_.rows() != m) {
    throw UsageError("noise covariance dimension does not match control dimension");
  }
  return mean + factor_ * z;
}

bool NoiseSpec::is_zero() const { return kind_ == Kind::kTrueSigma && sigma_.isZero(0.0); }

StateVec DynamicsModel::next_state_noisy(const StateVec& x, const ControlVec& v,
                                         RngStream& /*rng*/) const {
  return next_state(x, v);
}

ProcessNoiseModel::ProcessNoiseModel(ModelPtr base, double scale)
    : base_(std::move(base)), scale_(scale) {
  if (!base_) {
    throw UsageError("process noise model needs a base model");
  }
  if (!(scale >= 0.0) || !std::isfinite(scale)) {
    throw UsageError("process noise scale must be finite and non-negative");
  }
}

StateVec ProcessNoiseModel::next_state(const StateVec& x, const ControlVec& v) const {
  return base_->next_state(x, v);
}

StateVec ProcessNoiseModel::next_state_noisy(const StateVec& x, const ControlVec& v,
                                             RngStream& rng) const {
  StateVec next = base_->next_state(x, v);
  for (Eigen::Index i = 0; i < next.size(); ++i) {
    next(i) += scale_ * rng.normal();
  }
  return next;
}

namespace {

void check_dims(const DynamicsModel& model, const StateVec& x, const ControlVec& v) {
  if (x.size() != model.state_dim() || v.size() != model.control_dim()) {
    throw UsageError("state/control dimension mismatch: got (" + std::to_string(x.size()) +
                     ", " + std::to_string(v.size()) + "), model expects (" +
                     std::to_string(model.state_dim()) + ", " +
                     std::to_string(model.control_dim()) + ")");
  }
}

}  // namespace

StateVec step(const DynamicsModel& model, const StateVec& x, const ControlVec& v) {
  check_dims(model, x, v);
  StateVec next = model.next_state(x, v);
  if (!next.allFinite()) {
    throw NumericError("dynamics produced a non-finite state", 1);
  }
  return next;
}

StateVec step_stochastic(const DynamicsModel& model, const StateVec& x, const ControlVec& v,
                         RngStream& rng) {
  if (!model.stochastic()) {
    throw UsageError("step_stochastic called on a deterministic model");
  }
  check_dims(model, x, v);
  StateVec next = model.next_state_noisy(x, v, rng);
  if (!next.allFinite()) {
    throw NumericError("dynamics produced a non-finite state", 1);
  }
  return next;
}

Trajectory rollout(const DynamicsModel& model, const StateVec& x0, const ControlSequence& controls,
                   RngStream* rng) {
  if (controls.rows() != model.control_dim() || x0.size() != model.state_dim()) {
    throw UsageError("rollout dimension mismatch");
  }
  const Eigen::Index horizon = controls.cols();
  Trajectory tau(x0.size(), horizon + 1);
  tau.col(0) = x0;
  const bool noisy = rng != nullptr && model.stochastic();
  for (Eigen::Index k = 0; k < horizon; ++k) {
    const StateVec x = tau.col(k);
    const ControlVec v = controls.col(k);
    tau.col(k + 1) = noisy ? model.next_state_noisy(x, v, *rng) : model.next_state(x, v);
    if (!tau.col(k + 1).allFinite()) {
      throw NumericError("rollout produced a non-finite state", static_cast<long>(k + 1));
    }
  }
  return tau;
}

ControlSequence sample_control_sequence(const ControlSequence& nominal, const NoiseSpec& noise,
                                        const ControlBox& box, double explore_prob,
                                        RngStream& rng) {
  if (!(explore_prob >= 0.0 && explore_prob <= 1.0)) {
    throw UsageError("explore_prob must lie in [0, 1]");
  }
  if (nominal.rows() != box.dim()) {
    throw UsageError("nominal control dimension does not match control box");
  }
  ControlSequence out(nominal.rows(), nominal.cols());
  // Always consume the mixture draw so the stream layout does not depend on explore_prob.
  const bool explore = rng.uniform(0.0, 1.0) < explore_prob;
  if (explore) {
    for (Eigen::Index k = 0; k < nominal.cols(); ++k) {
      for (Eigen::Index i = 0; i < nominal.rows(); ++i) {
        out(i, k) = rng.uniform(box.lo(i), box.hi(i));
      }
    }
  } else {
    for (Eigen::Index k = 0; k < nominal.cols(); ++k) {
      out.col(k) = noise.sample(nominal.col(k), rng);
    }
  }
  box.clamp_in_place(out);
  return out;
}

void require_finite(const Eigen::MatrixXd& m, const char* what) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    if (!m.col(c).allFinite()) {
      throw NumericError(std::string(what) + " is not finite", static_cast<long>(c));
    }
  }
}

}  // namespace rhirl
