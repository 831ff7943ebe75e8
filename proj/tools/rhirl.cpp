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

// rhirl: command-line driver for demo generation, training and evaluation.

#include "rhirl/config.hpp"
#include "rhirl/eval.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace rhirl;

namespace {

enum Exit : int {
  kOk = 0,
  kFailure = 1,
  kConfig = 2,
  kGeneration = 3,
  kMismatch = 4,
  kNumeric = 5,
};

struct Common {
  std::string config;
  std::optional<int> workers;
};

RunConfig load(const Common& c) {
  RunConfig cfg = load_run_config(c.config);
  apply_environment_overrides(cfg);
  if (c.workers) {
    if (*c.workers < 1) throw ConfigError("--workers must be >= 1");
    cfg.workers = *c.workers;
  }
  return cfg;
}

std::string report_path(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.reports_dir);
  return (fs::path(cfg.reports_dir) / name).string();
}

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

/// Expert reference for one noise level: the demo metadata when it was
/// recorded at that level, otherwise a fresh expert run on the evaluation starts.
double expert_mean_for(const RunConfig& cfg, const Environment& env, const DemoSet* demos,
                       double level) {
  if (demos != nullptr && demos->noise_level == level) return demos->expert_mean;
  return expert_reference(env, level, cfg.eval_episodes, cfg.expert, cfg.seed, cfg.workers)
      .mean_return;
}

void print_report(const EvalReport& r) {
  std::printf("%-18s noise %.2f  return %9.2f +- %7.2f  expert %9.2f  ratio %.3f  (%.1fs)\n",
              r.env.c_str(), r.noise_level, r.mean_return, r.std_return, r.expert_mean, r.ratio,
              r.wall_clock_s);
}

int cmd_gen_demos(const Common& c, std::optional<double> noise, std::optional<int> count,
                  std::optional<std::string> out) {
  RunConfig cfg = load(c);
  if (noise) cfg.demo_noise = *noise;
  if (count) cfg.demo_count = *count;
  if (out) cfg.demos_path = *out;
  cfg.validate();
  const Environment env = make_env(cfg.env);
  const DemoSet d = generate_demos(env, cfg.demo_noise, cfg.demo_count, cfg.expert, cfg.seed,
                                   cfg.workers);
  ensure_parent(cfg.demos_path);
  save_demos(cfg.demos_path, d);
  std::printf("wrote %d %s demonstrations (noise %.2f) to %s\n", d.count(), d.env.c_str(),
              d.noise_level, cfg.demos_path.c_str());
  std::printf("expert mean return %.2f +- %.2f\n", d.expert_mean, d.expert_std);
  return kOk;
}

int cmd_train(const Common& c, std::optional<std::string> demos_path,
              std::optional<std::string> out, std::optional<std::string> resume) {
  RunConfig cfg = load(c);
  if (demos_path) cfg.demos_path = *demos_path;
  if (out) cfg.checkpoint_path = *out;
  const Environment env = make_env(cfg.env);
  const DemoSet demos = load_demos(cfg.demos_path, env);

  std::optional<Checkpoint> start;
  if (resume) {
    start = load_checkpoint(*resume);
    if (start->seed != cfg.seed) {
      throw ConfigError("checkpoint seed " + std::to_string(start->seed) +
                        " differs from the configured seed " + std::to_string(cfg.seed));
    }
  }
  ensure_parent(cfg.checkpoint_path);
  TrainOptions opts;
  opts.resume = start ? &*start : nullptr;
  opts.failure_checkpoint = cfg.checkpoint_path;
  opts.workers = cfg.workers;
  opts.on_episode = [](const MetricsRow& r) {
    std::printf("episode %4d  env steps %10lld  return %9.2f", r.episode,
                static_cast<long long>(r.env_steps), r.train_return);
    if (r.eval_return) std::printf("  eval %9.2f  ratio %.3f", *r.eval_return, *r.eval_ratio);
    std::printf("\n");
    std::fflush(stdout);
  };
  const TrainResult res = train(cfg.train, demos, opts);
  save_checkpoint(cfg.checkpoint_path, res.checkpoint());
  const std::string stem = cfg.env + "_metrics";
  write_metrics_csv(report_path(cfg, stem + ".csv"), res.metrics);
  write_metrics_jsonl(report_path(cfg, stem + ".jsonl"), res.metrics);
  std::printf("checkpoint written to %s after %d episodes (%lld env steps)\n",
              cfg.checkpoint_path.c_str(), res.episodes_done,
              static_cast<long long>(res.env_steps));
  return kOk;
}

CostParams load_learned(const RunConfig& cfg, const Environment& env,
                        std::optional<std::string> ckpt_path) {
  const Checkpoint ck = load_checkpoint(ckpt_path.value_or(cfg.checkpoint_path));
  if (ck.env != cfg.env) {
    throw DemoMismatchError("checkpoint was trained on '" + ck.env + "', not '" + cfg.env + "'");
  }
  CostParams p = ck.learned();
  if (p.input_dim() != env.spec.n) throw DemoMismatchError("checkpoint input dimension mismatch");
  return p;
}

std::optional<DemoSet> optional_demos(const RunConfig& cfg, const Environment& env) {
  if (!fs::exists(cfg.demos_path)) return std::nullopt;
  return load_demos(cfg.demos_path, env);
}

int cmd_eval(const Common& c, std::optional<std::string> ckpt, std::optional<std::string> demos_path,
             std::optional<std::vector<double>> levels) {
  RunConfig cfg = load(c);
  if (demos_path) cfg.demos_path = *demos_path;
  if (levels) cfg.eval_noise_levels = *levels;
  cfg.validate();
  const Environment env = make_env(cfg.env);
  const CostParams params = load_learned(cfg, env, ckpt);
  const std::optional<DemoSet> demos = optional_demos(cfg, env);
  std::vector<EvalReport> reports;
  for (double level : cfg.eval_noise_levels) {
    const double ref = expert_mean_for(cfg, env, demos ? &*demos : nullptr, level);
    reports.push_back(evaluate_policy(params, env, level, cfg.eval_episodes,
                                      cfg.train.eval_controller(), ref, cfg.seed, cfg.workers));
    print_report(reports.back());
  }
  write_reports_csv(report_path(cfg, cfg.env + "_eval.csv"), reports);
  write_reports_json(report_path(cfg, cfg.env + "_eval.json"), reports);
  return kOk;
}

int cmd_eval_transfer(const Common& c, std::optional<std::string> ckpt,
                      std::optional<std::string> demos_path) {
  RunConfig cfg = load(c);
  if (demos_path) cfg.demos_path = *demos_path;
  const Environment env = make_env(cfg.env);
  const CostParams params = load_learned(cfg, env, ckpt);
  const std::optional<DemoSet> demos = optional_demos(cfg, env);
  std::vector<double> levels{0.0};
  levels.insert(levels.end(), cfg.transfer_levels.begin(), cfg.transfer_levels.end());
  std::vector<double> refs;
  for (double l : levels) refs.push_back(expert_mean_for(cfg, env, demos ? &*demos : nullptr, l));
  const std::vector<EvalReport> reports =
      transfer_eval(params, env, levels, refs, cfg.eval_episodes, cfg.train.eval_controller(),
                    cfg.seed, cfg.workers);
  for (const EvalReport& r : reports) {
    print_report(r);
  }
  for (std::size_t i = 1; i < reports.size(); ++i) {
    const double base = reports.front().ratio;
    std::printf("noise %.2f retains %.1f%% of the noise-free ratio\n", reports[i].noise_level,
                base > 0.0 ? 100.0 * reports[i].ratio / base : 0.0);
  }
  write_reports_csv(report_path(cfg, cfg.env + "_transfer.csv"), reports);
  write_reports_json(report_path(cfg, cfg.env + "_transfer.json"), reports);
  return kOk;
}

int cmd_ablate_k(const Common& c, std::optional<std::string> demos_path,
                 std::optional<std::vector<int>> Ks) {
  RunConfig cfg = load(c);
  if (demos_path) cfg.demos_path = *demos_path;
  if (Ks) cfg.ablation_K = *Ks;
  cfg.validate();
  const Environment env = make_env(cfg.env);
  const DemoSet demos = load_demos(cfg.demos_path, env);
  const HorizonAblation ab = ablate_horizon(cfg.train, demos, cfg.ablation_K, cfg.ablation_seeds,
                                            cfg.ablation_smooth, cfg.workers);
  for (const HorizonRun& r : ab.runs) {
    std::printf("K %3d seed %llu  final smoothed return %9.2f  steps to 90%% plateau %10lld  (%.0fs)\n",
                r.K, static_cast<unsigned long long>(r.seed), r.final_smoothed,
                static_cast<long long>(r.steps_to_plateau), r.seconds);
  }
  write_curves_csv(report_path(cfg, cfg.env + "_ablation_curves.csv"), ab);
  write_ablation_summary_csv(report_path(cfg, cfg.env + "_ablation_summary.csv"), ab);
  return kOk;
}

int cmd_check_bound(const Common& c, std::optional<std::string> ckpt,
                    std::optional<std::vector<int>> Ts) {
  RunConfig cfg = load(c);
  if (Ts) cfg.bound_T = *Ts;
  cfg.validate();
  const Environment env = make_env(cfg.env);
  const CostParams params = load_learned(cfg, env, ckpt);
  const LearnedCost learned(params);
  const TvTrend trend = tv_trend(env, learned, cfg.train.eval_controller(), cfg.expert,
                                 cfg.bound_T, cfg.bound_episodes, cfg.seed, cfg.workers);
  for (const TvPoint& p : trend.points) {
    std::printf("T %4d  samples %6ld  D_TV %.4f  T*D_TV %.3f\n", p.T, p.samples, p.d_tv,
                p.cumulative);
    if (!p.warning.empty()) std::fprintf(stderr, "warning: T=%d: %s\n", p.T, p.warning.c_str());
  }
  std::printf("log-log growth exponent %.3f (linear growth: 1, quadratic: 2)\n", trend.slope);
  write_tv_csv(report_path(cfg, cfg.env + "_tv_trend.csv"), trend);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Receding-horizon inverse reinforcement learning"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "Run configuration (INI)")->required();
    sub->add_option("--workers", common.workers, "Upper bound on worker threads");
  };

  std::optional<double> noise;
  std::optional<int> count;
  std::optional<std::string> out, demos, resume, ckpt;
  std::optional<std::vector<double>> levels;
  std::optional<std::vector<int>> ks, ts;

  auto* gen = app.add_subcommand("gen-demos", "Generate expert demonstrations");
  add_common(gen);
  gen->add_option("--noise", noise, "Control noise level");
  gen->add_option("--count", count, "Number of demonstrations");
  gen->add_option("--out", out, "Output demo file");

  auto* tr = app.add_subcommand("train", "Learn a cost from demonstrations");
  add_common(tr);
  tr->add_option("--demos", demos, "Demo file");
  tr->add_option("--out", out, "Checkpoint to write");
  tr->add_option("--resume", resume, "Checkpoint to continue from");

  auto* ev = app.add_subcommand("eval", "Score a learned cost with the ground truth");
  add_common(ev);
  ev->add_option("--checkpoint", ckpt, "Checkpoint to evaluate");
  ev->add_option("--demos", demos, "Demo file supplying the expert reference");
  ev->add_option("--noise", levels, "Execution noise levels")->delimiter(',');

  auto* et = app.add_subcommand("eval-transfer", "Re-optimise a noise-free cost under noise");
  add_common(et);
  et->add_option("--checkpoint", ckpt, "Checkpoint to evaluate");
  et->add_option("--demos", demos, "Demo file supplying the expert reference");

  auto* ab = app.add_subcommand("ablate-k", "Learning curves for several horizons");
  add_common(ab);
  ab->add_option("--demos", demos, "Demo file");
  ab->add_option("--K", ks, "Horizons")->delimiter(',');

  auto* cb = app.add_subcommand("check-bound", "State-marginal distance against episode length");
  add_common(cb);
  cb->add_option("--checkpoint", ckpt, "Checkpoint to evaluate");
  cb->add_option("--T", ts, "Episode lengths")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*gen) return cmd_gen_demos(common, noise, count, out);
    if (*tr) return cmd_train(common, demos, out, resume);
    if (*ev) return cmd_eval(common, ckpt, demos, levels);
    if (*et) return cmd_eval_transfer(common, ckpt, demos);
    if (*ab) return cmd_ablate_k(common, demos, ks);
    if (*cb) return cmd_check_bound(common, ckpt, ts);
  } catch (const GenerationError& e) {
    std::fprintf(stderr, "generation error: %s\n", e.what());
    return kGeneration;
  } catch (const DemoMismatchError& e) {
    std::fprintf(stderr, "mismatch: %s\n", e.what());
    return kMismatch;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kNumeric;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kFailure;
}
