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

#include "rhirl/cost_model.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace rhirl {

CostParams::CostParams(std::vector<int> widths) : widths_(std::move(widths)) {
  if (widths_.size() < 2 || widths_.back() != 1) {
    throw UsageError("cost network needs an input width and a scalar output");
  }
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    if (widths_[l] <= 0 || widths_[l + 1] <= 0) {
      throw UsageError("layer widths must be positive");
    }
    offsets_.push_back(offset);
    offset += static_cast<Eigen::Index>(widths_[l + 1]) * (widths_[l] + 1);
  }
  flat_ = Eigen::VectorXd::Zero(offset);
}

CostParams CostParams::zeros(int input_dim, const std::vector<int>& hidden) {
  std::vector<int> widths{input_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(1);
  return CostParams(std::move(widths));
}

CostParams CostParams::init(int input_dim, const std::vector<int>& hidden, RngStream& rng) {
  CostParams p = zeros(input_dim, hidden);
  for (int l = 0; l < p.num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(p.widths_[l]));
    auto w = p.weight(l);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        w(i, j) = rng.uniform(-bound, bound);
      }
    }
    auto b = p.bias(l);
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      b(i) = rng.uniform(-bound, bound);
    }
  }
  return p;
}

CostParams CostParams::from_flat(std::vector<int> widths, Eigen::VectorXd flat) {
  CostParams p;
  try {
    p = CostParams(std::move(widths));
  } catch (const UsageError& e) {
    throw FormatError(std::string("bad layer widths: ") + e.what());
  }
  if (p.flat_.size() != flat.size()) {
    throw FormatError("flattened parameter length " + std::to_string(flat.size()) +
                      " does not match layer widths (expected " +
                      std::to_string(p.flat_.size()) + ")");
  }
  p.flat_ = std::move(flat);
  return p;
}

Eigen::Index CostParams::bias_offset(int layer) const {
  return offsets_.at(layer) + static_cast<Eigen::Index>(widths_[layer + 1]) * widths_[layer];
}

Eigen::Map<const Eigen::MatrixXd> CostParams::weight(int layer) const {
  return {flat_.data() + offsets_.at(layer), widths_[layer + 1], widths_[layer]};
}

Eigen::Map<Eigen::MatrixXd> CostParams::weight(int layer) {
  return {flat_.data() + offsets_.at(layer), widths_[layer + 1], widths_[layer]};
}

Eigen::Map<const Eigen::VectorXd> CostParams::bias(int layer) const {
  return {flat_.data() + bias_offset(layer), widths_[layer + 1]};
}

Eigen::Map<Eigen::VectorXd> CostParams::bias(int layer) {
  return {flat_.data() + bias_offset(layer), widths_[layer + 1]};
}

namespace {

// Pre-activations of every layer for a batch of column inputs.
struct ForwardPass {
  std::vector<Eigen::MatrixXd> pre;  // z_l, l = 0..L-1
  Eigen::RowVectorXd out;
};

Eigen::MatrixXd relu(const Eigen::MatrixXd& z) { return z.cwiseMax(0.0); }

ForwardPass forward(const CostParams& params, const Eigen::MatrixXd& states) {
  if (states.rows() != params.input_dim()) {
    throw UsageError("state dimension " + std::to_string(states.rows()) +
                     " does not match cost network input " +
                     std::to_string(params.input_dim()));
  }
  ForwardPass fp;
  const int layers = params.num_layers();
  fp.pre.reserve(layers);
  Eigen::MatrixXd act = states;
  for (int l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = params.weight(l) * act;
    z.colwise() += params.bias(l);
    if (l + 1 < layers) {
      act = relu(z);
    }
    fp.pre.push_back(std::move(z));
  }
  fp.out = fp.pre.back().row(0);
  for (Eigen::Index c = 0; c < fp.out.size(); ++c) {
    if (!std::isfinite(fp.out(c))) {
      throw NumericError("cost network output is not finite", static_cast<long>(c));
    }
  }
  return fp;
}

Eigen::VectorXd backward(const CostParams& params, const Eigen::MatrixXd& states,
                         const ForwardPass& fp, const Eigen::VectorXd& coeff) {
  const int layers = params.num_layers();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.size());
  Eigen::MatrixXd dz = coeff.transpose();
  for (int l = layers - 1; l >= 0; --l) {
    const Eigen::MatrixXd input = l == 0 ? states : relu(fp.pre[l - 1]);
    const auto rows = params.widths()[l + 1];
    const auto cols = params.widths()[l];
    Eigen::Map<Eigen::MatrixXd>(grad.data() + params.weight_offset(l), rows, cols) =
        dz * input.transpose();
    grad.segment(params.bias_offset(l), rows) = dz.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd da = params.weight(l).transpose() * dz;
      dz = da.cwiseProduct((fp.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  for (Eigen::Index i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad(i))) {
      throw NumericError("cost gradient is not finite", static_cast<long>(i));
    }
  }
  return grad;
}

}  // namespace

Eigen::VectorXd g_batch(const CostParams& params, const Eigen::MatrixXd& states) {
  return forward(params, states).out.transpose();
}

double g(const CostParams& params, const StateVec& x) {
  return forward(params, x).out(0);
}

CostEval g_backward(const CostParams& params, const StateVec& x) {
  const Eigen::MatrixXd states = x;
  const ForwardPass fp = forward(params, states);
  return {fp.out(0), backward(params, states, fp, Eigen::VectorXd::Ones(1))};
}

Eigen::VectorXd g_weighted_grad(const CostParams& params, const Eigen::MatrixXd& states,
                                const Eigen::VectorXd& coeff) {
  if (coeff.size() != states.cols()) {
    throw UsageError("one coefficient per state required");
  }
  if (states.cols() == 0) {
    return Eigen::VectorXd::Zero(params.size());
  }
  return backward(params, states, forward(params, states), coeff);
}

double compensated_sum(const Eigen::VectorXd& values) {
  double sum = 0.0;
  double comp = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double v = values(i);
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

double state_cost_S(const CostParams& params, const Trajectory& tau) {
  if (tau.cols() == 0) {
    throw UsageError("empty trajectory");
  }
  return compensated_sum(g_batch(params, tau));
}

double state_cost_S(const CostParams& params, const Trajectory& tau, int horizon) {
  if (tau.cols() != horizon + 1) {
    throw UsageError("trajectory has " + std::to_string(tau.cols()) + " states, expected " +
                     std::to_string(horizon + 1));
  }
  return state_cost_S(params, tau);
}

double total_cost_J(const CostParams& params, const Trajectory& tau, const ControlSequence& U,
                    const NoiseSpec& noise, double lambda) {
  if (!(lambda >= 0.0)) {
    throw UsageError("lambda must be non-negative");
  }
  if (tau.cols() != U.cols() + 1) {
    throw UsageError("trajectory must have one more state than controls");
  }
  const Eigen::MatrixXd precision = noise.precision(static_cast<int>(U.rows()));
  Eigen::VectorXd quad(U.cols());
  for (Eigen::Index k = 0; k < U.cols(); ++k) {
    quad(k) = U.col(k).dot(precision * U.col(k));
  }
  return state_cost_S(params, tau) + 0.5 * lambda * compensated_sum(quad);
}

double expected_state_cost(const CostParams& params, const DynamicsModel& model,
                           const StateVec& x0, const ControlSequence& V, int samples,
                           const RngStream& rng) {
  if (samples < 1) {
    throw UsageError("expected_state_cost needs at least one sample");
  }
  if (!model.stochastic()) {
    return state_cost_S(params, rollout(model, x0, V));
  }
  Eigen::VectorXd costs(samples);
  for (int h = 0; h < samples; ++h) {
    RngStream sub = rng.derive({static_cast<std::uint64_t>(h)});
    costs(h) = state_cost_S(params, rollout(model, x0, V, &sub));
  }
  return compensated_sum(costs) / samples;
}

Eigen::VectorXd GroundTruthTrajectoryCost::state_costs(const Eigen::MatrixXd& states) const {
  Eigen::VectorXd out(states.cols());
  for (Eigen::Index c = 0; c < states.cols(); ++c) {
    out(c) = cost_.state_cost(states.col(c));
  }
  return out;
}

// Checkpoints are JSON. nlohmann/json writes doubles in shortest round-trip
// form, so the flattened parameters reload bit-exactly.

namespace {

using nlohmann::json;

json vec_to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd json_to_vec(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  json j;
  j["format"] = "rhirl-checkpoint";
  j["version"] = 1;
  j["env"] = ckpt.env;
  j["layer_widths"] = ckpt.params.widths();
  j["params"] = vec_to_json(ckpt.params.flat());
  j["training_step"] = ckpt.training_step;
  j["episodes_done"] = ckpt.episodes_done;
  j["env_steps"] = ckpt.env_steps;
  j["seed"] = ckpt.seed;
  j["adam_m"] = vec_to_json(ckpt.adam_m);
  j["adam_v"] = vec_to_json(ckpt.adam_v);
  j["param_average"] = vec_to_json(ckpt.param_average);
  j["param_ema"] = ckpt.param_ema;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw FormatError("cannot open checkpoint for writing: " + path);
  }
  out << j.dump(1) << '\n';
  if (!out) {
    throw FormatError("failed writing checkpoint: " + path);
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open checkpoint: " + path);
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  Checkpoint ckpt;
  try {
    const json j = json::parse(buffer.str());
    if (j.at("format").get<std::string>() != "rhirl-checkpoint" ||
        j.at("version").get<int>() != 1) {
      throw FormatError("not an rhirl checkpoint (version 1): " + path);
    }
    ckpt.env = j.at("env").get<std::string>();
    ckpt.params = CostParams::from_flat(j.at("layer_widths").get<std::vector<int>>(),
                                        json_to_vec(j.at("params")));
    ckpt.training_step = j.at("training_step").get<std::int64_t>();
    ckpt.episodes_done = j.at("episodes_done").get<std::int64_t>();
    ckpt.env_steps = j.at("env_steps").get<std::int64_t>();
    ckpt.seed = j.at("seed").get<std::uint64_t>();
    ckpt.adam_m = json_to_vec(j.at("adam_m"));
    ckpt.adam_v = json_to_vec(j.at("adam_v"));
    ckpt.param_average = json_to_vec(j.at("param_average"));
    ckpt.param_ema = j.at("param_ema").get<double>();
  } catch (const json::exception& e) {
    throw FormatError("malformed checkpoint " + path + ": " + e.what());
  }
  if (!ckpt.params.flat().allFinite()) {
    throw FormatError("checkpoint parameters are not finite: " + path);
  }
  const auto moments = ckpt.adam_m.size();
  if (moments != ckpt.adam_v.size() || (moments != 0 && moments != ckpt.params.size())) {
    throw FormatError("checkpoint optimizer state does not match parameters: " + path);
  }
  if (ckpt.param_average.size() != 0 && ckpt.param_average.size() != ckpt.params.size()) {
    throw FormatError("checkpoint parameter average does not match parameters: " + path);
  }
  if (!(ckpt.param_ema >= 0.0 && ckpt.param_ema < 1.0)) {
    throw FormatError("checkpoint averaging decay out of range: " + path);
  }
  return ckpt;
}

CostParams Checkpoint::learned() const {
  if (param_ema <= 0.0 || param_average.size() == 0 || training_step <= 0) return params;
  const double correction = 1.0 - std::pow(param_ema, static_cast<double>(training_step));
  return CostParams::from_flat(params.widths(), param_average / correction);
}

void save_params(const std::string& path, const std::string& env, const CostParams& params,
                 std::int64_t training_step, std::uint64_t seed) {
  Checkpoint ckpt;
  ckpt.env = env;
  ckpt.params = params;
  ckpt.training_step = training_step;
  ckpt.seed = seed;
  save_checkpoint(path, ckpt);
}

CostParams load_params(const std::string& path, const std::string& env,
                       const std::vector<int>& expected_widths) {
  Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.env != env) {
    throw FormatError("checkpoint was trained on '" + ckpt.env + "', expected '" + env + "'");
  }
  if (ckpt.params.widths() != expected_widths) {
    throw FormatError("checkpoint layer shapes do not match the configured network");
  }
  return std::move(ckpt.params);
}

}  // namespace rhirl
