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

#include "rhirl/trainer.hpp"

#include "rhirl/eval.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace rhirl {

GradWeighting parse_grad_weighting(const std::string& s) {
  if (s == "self-normalized") return GradWeighting::kSelfNormalized;
  if (s == "as-printed") return GradWeighting::kAsPrinted;
  throw UsageError("grad_weighting must be 'self-normalized' or 'as-printed', got '" + s + "'");
}

std::string to_string(GradWeighting w) {
  return w == GradWeighting::kAsPrinted ? "as-printed" : "self-normalized";
}

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "adam") return OptimizerKind::kAdam;
  if (s == "sgd") return OptimizerKind::kSgd;
  throw UsageError("optimizer must be 'adam' or 'sgd', got '" + s + "'");
}

std::string to_string(OptimizerKind o) { return o == OptimizerKind::kSgd ? "sgd" : "adam"; }

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw UsageError("lr must be > 0");
  if (!(weight_decay >= 0.0)) throw UsageError("weight_decay must be >= 0");
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (episodes < 0) throw UsageError("episodes must be >= 0");
  if (hidden.empty()) throw UsageError("cost network needs at least one hidden layer");
  for (int h : hidden) {
    if (h < 1) throw UsageError("hidden widths must be positive");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw UsageError("Adam betas must lie in [0, 1)");
  }
  if (!(env_noise >= 0.0)) throw UsageError("env_noise must be >= 0");
  if (!(param_ema >= 0.0 && param_ema < 1.0)) throw UsageError("param_ema must lie in [0, 1)");
  if (eval_every < 0 || eval_episodes < 1) throw UsageError("bad evaluation schedule");
  if (!(eval_explore_prob >= 0.0 && eval_explore_prob <= 1.0)) {
    throw UsageError("eval_explore_prob must lie in [0, 1]");
  }
  controller.validate();
}

ControllerConfig TrainConfig::eval_controller() const {
  ControllerConfig c = controller;
  c.explore_prob = eval_explore_prob;
  return c;
}

DemoWindowBatch extract_windows(const DemoSet& demos, int t, int K, int batch_size,
                                RngStream& rng) {
  if (demos.count() == 0) throw UsageError("no demonstrations");
  if (t < 0 || t >= demos.T) {
    throw UsageError("window start t=" + std::to_string(t) + " outside [0, " +
                     std::to_string(demos.T) + ")");
  }
  if (K < 0 || batch_size < 1) throw UsageError("bad window request");
  const int len = std::min(K + 1, demos.T - t);
  const auto count = static_cast<std::size_t>(demos.count());
  std::vector<std::size_t> picks;
  if (count < static_cast<std::size_t>(batch_size)) {
    for (int i = 0; i < batch_size; ++i) picks.push_back(rng.uniform_index(count));
  } else {
    // Partial Fisher-Yates.
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (int i = 0; i < batch_size; ++i) {
      const std::size_t j = i + rng.uniform_index(count - i);
      std::swap(idx[i], idx[j]);
      picks.push_back(idx[i]);
    }
  }
  DemoWindowBatch out;
  out.t = t;
  for (std::size_t p : picks) {
    out.windows.push_back(demos.trajectories[p].middleCols(t, len));
  }
  return out;
}

Eigen::VectorXd estimate_gradient(const CostParams& params, const DemoWindowBatch& windows,
                                  const RolloutBatch& batch, double lambda,
                                  GradWeighting weighting) {
  const int N = windows.size();
  const int M = batch.size();
  const int L = windows.length();
  if (N == 0 || M == 0 || L == 0) throw UsageError("estimate_gradient needs windows and rollouts");
  if (batch.weights.size() != M) throw UsageError("rollout batch is not weighted");
  if (!(lambda > 0.0)) throw UsageError("lambda must be > 0");

  Eigen::Index total = static_cast<Eigen::Index>(N) * L;
  for (const auto& taus : batch.trajectories) {
    total += static_cast<Eigen::Index>(taus.size()) * L;
  }
  const int n = params.input_dim();
  Eigen::MatrixXd states(n, total);
  Eigen::VectorXd coeff(total);
  Eigen::Index col = 0;
  const double expert_c = 1.0 / (N * lambda);
  for (const Trajectory& w : windows.windows) {
    if (w.cols() != L || w.rows() != n) throw UsageError("windows must share one shape");
    states.middleCols(col, L) = w;
    coeff.segment(col, L).setConstant(expert_c);
    col += L;
  }
  const double scale = weighting == GradWeighting::kAsPrinted ? 1.0 / M : 1.0;
  for (int j = 0; j < M; ++j) {
    const auto& taus = batch.trajectories[j];
    if (taus.empty()) throw UsageError("rollout without trajectories");
    const double c = -scale * batch.weights(j) / (lambda * static_cast<double>(taus.size()));
    for (const Trajectory& tau : taus) {
      if (tau.cols() < L) throw UsageError("rollout shorter than the demo window");
      states.middleCols(col, L) = tau.leftCols(L);
      coeff.segment(col, L).setConstant(c);
      col += L;
    }
  }
  Eigen::VectorXd grad = g_weighted_grad(params, states, coeff);
  for (Eigen::Index i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad(i))) throw NumericError("non-finite gradient component", i);
  }
  return grad;
}

CostParams apply_update(const CostParams& params, const Eigen::VectorXd& grad,
                        const TrainConfig& cfg, OptimizerState& state) {
  if (grad.size() != params.size()) throw UsageError("gradient length does not match params");
  CostParams out = params;
  Eigen::VectorXd& theta = out.flat();
  const double lr = cfg.lr;
  theta *= 1.0 - lr * cfg.weight_decay;
  ++state.step;
  if (cfg.optimizer == OptimizerKind::kSgd) {
    theta -= lr * grad;
    return out;
  }
  if (state.m.size() != grad.size()) {
    state.m = Eigen::VectorXd::Zero(grad.size());
    state.v = Eigen::VectorXd::Zero(grad.size());
  }
  state.m = cfg.adam_beta1 * state.m + (1.0 - cfg.adam_beta1) * grad;
  state.v = cfg.adam_beta2 * state.v + (1.0 - cfg.adam_beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.step));
  theta.array() -=
      lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + cfg.adam_eps);
  return out;
}

Checkpoint TrainResult::checkpoint() const {
  Checkpoint c;
  c.params = iterate;
  c.param_average = average;
  c.training_step = optimizer.step;
  c.episodes_done = episodes_done;
  c.adam_m = optimizer.m;
  c.adam_v = optimizer.v;
  c.env_steps = env_steps;
  c.env = env;
  c.seed = seed;
  c.param_ema = param_ema;
  return c;
}

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

}  // namespace

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out << "episode,env_steps,train_return,eval_return,eval_ratio,grad_norm,s_min,weight_entropy\n";
  for (const MetricsRow& r : rows) {
    out << r.episode << ',' << r.env_steps << ',' << fmt(r.train_return) << ','
        << fmt(r.eval_return) << ',' << fmt(r.eval_ratio) << ',' << fmt(r.grad_norm) << ','
        << fmt(r.s_min) << ',' << fmt(r.weight_entropy) << '\n';
  }
}

void write_metrics_jsonl(const std::string& path, const std::vector<MetricsRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  for (const MetricsRow& r : rows) {
    nlohmann::json j{{"episode", r.episode},
                     {"env_steps", r.env_steps},
                     {"train_return", r.train_return},
                     {"grad_norm", r.grad_norm},
                     {"s_min", r.s_min},
                     {"weight_entropy", r.weight_entropy}};
    j["eval_return"] = r.eval_return ? nlohmann::json(*r.eval_return) : nlohmann::json(nullptr);
    j["eval_ratio"] = r.eval_ratio ? nlohmann::json(*r.eval_ratio) : nlohmann::json(nullptr);
    out << j.dump() << '\n';
  }
}

namespace {

CostParams averaged_params(const TrainResult& res) { return res.checkpoint().learned(); }

}  // namespace

TrainResult train(const TrainConfig& cfg, const DemoSet& demos, const TrainOptions& opts) {
  cfg.validate();
  const Environment env = make_env(cfg.env);
  check_demos(demos, env);
  const int T = env.spec.T;
  const NoiseSpec exec_noise = NoiseSpec::isotropic(cfg.env_noise, env.spec.m);
  ControllerConfig ctrl = cfg.controller;
  ctrl.workers = opts.workers;

  const RngStream root(cfg.seed, 2);
  TrainResult res;
  res.env = cfg.env;
  res.seed = cfg.seed;
  res.param_ema = cfg.param_ema;
  if (opts.resume != nullptr) {
    const Checkpoint& c = *opts.resume;
    if (c.env != cfg.env) throw DemoMismatchError("checkpoint was trained on '" + c.env + "'");
    std::vector<int> widths{env.spec.n};
    widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
    widths.push_back(1);
    if (c.params.widths() != widths) {
      throw FormatError("checkpoint network shape does not match the configuration");
    }
    res.iterate = c.params;
    res.average = c.param_average;
    res.optimizer.m = c.adam_m;
    res.optimizer.v = c.adam_v;
    res.optimizer.step = c.training_step;
    res.episodes_done = static_cast<int>(c.episodes_done);
    res.env_steps = c.env_steps;
  } else {
    RngStream init = root.derive({0});
    res.iterate = CostParams::init(env.spec.n, cfg.hidden, init);
  }

  res.params = averaged_params(res);
  for (int ep = res.episodes_done; ep < cfg.episodes; ++ep) {
    const CostParams start_params = res.iterate;
    const Eigen::VectorXd start_average = res.average;
    const OptimizerState start_opt = res.optimizer;
    const std::int64_t start_steps = res.env_steps;
    const RngStream ep_rng = root.derive({1, static_cast<std::uint64_t>(ep)});
    RngStream init_rng = ep_rng.derive({0});
    StateVec x = env.sample_initial(init_rng);
    ControlSequence U = ControlSequence::Zero(env.spec.m, ctrl.K);

    MetricsRow row;
    row.episode = ep;
    double cost_sum = 0.0;
    int t = 0;
    try {
      for (t = 0; t < T; ++t) {
        const auto key = static_cast<std::uint64_t>(t);
        const LearnedCost cost(res.iterate);
        RolloutBatch batch = evaluate_rollouts(*env.model, x, U, cost, ctrl, env.spec.box,
                                               ep_rng.derive({1, key}));
        compute_weights(batch, ctrl);
        RngStream win_rng = ep_rng.derive({2, key});
        const DemoWindowBatch windows = extract_windows(demos, t, ctrl.K, cfg.batch_size, win_rng);
        const Eigen::VectorXd grad =
            estimate_gradient(res.iterate, windows, batch, ctrl.lambda, cfg.grad_weighting);
        res.iterate = apply_update(res.iterate, grad, cfg, res.optimizer);
        require_finite(res.iterate.flat(), "cost parameters");
        if (cfg.param_ema > 0.0) {
          if (res.average.size() != res.iterate.size()) {
            res.average = Eigen::VectorXd::Zero(res.iterate.size());
          }
          res.average = cfg.param_ema * res.average + (1.0 - cfg.param_ema) * res.iterate.flat();
        }
        U = update_nominal(batch, ctrl, env.spec.box);
        auto [u, shifted] = receding_step(U);
        U = std::move(shifted);
        RngStream exec_rng = ep_rng.derive({3, key});
        ExecutedStep step_out = execute_control(*env.model, x, u, exec_noise, env.spec.box,
                                                exec_rng);
        cost_sum += env.cost.step_cost(x, step_out.applied);
        x = std::move(step_out.next);
        res.env_steps += batch.env_steps + 1;
        row.grad_norm += grad.norm() / T;
        row.s_min += batch.s_min / T;
        row.weight_entropy += weight_entropy(batch.weights) / T;
      }
    } catch (const NumericError& e) {
      if (!opts.failure_checkpoint.empty()) {
        TrainResult good;
        good.iterate = start_params;
        good.average = start_average;
        good.env = cfg.env;
        good.seed = cfg.seed;
        good.param_ema = cfg.param_ema;
        good.optimizer = start_opt;
        good.env_steps = start_steps;
        good.episodes_done = ep;
        save_checkpoint(opts.failure_checkpoint, good.checkpoint());
      }
      throw TrainingError(e.what(), ep, t);
    }
    res.params = averaged_params(res);
    row.train_return = -cost_sum;
    row.env_steps = res.env_steps;
    res.episodes_done = ep + 1;
    if (cfg.eval_every > 0 && (ep + 1) % cfg.eval_every == 0) {
      const EvalReport rep =
          evaluate_policy(res.params, env, cfg.env_noise, cfg.eval_episodes, cfg.eval_controller(),
                          demos.expert_mean, cfg.seed, opts.workers);
      row.eval_return = rep.mean_return;
      row.eval_ratio = rep.ratio;
    }
    res.metrics.push_back(row);
    if (opts.on_episode) opts.on_episode(row);
  }
  return res;
}

}  // namespace rhirl
