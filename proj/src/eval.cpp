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

#include "rhirl/eval.hpp"

#include "parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace rhirl {

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

double return_ratio(double mean, double expert_mean) {
  double r = 0.0;
  if (expert_mean < 0.0) {
    r = mean < 0.0 ? expert_mean / mean : std::numeric_limits<double>::infinity();
  } else if (expert_mean > 0.0) {
    r = mean / expert_mean;
  } else {
    r = mean >= 0.0 ? 1.0 : 0.0;
  }
  return std::max(0.0, r);
}

EvalReport evaluate_cost(const TrajectoryCostModel& cost, const Environment& env,
                         double noise_level, int episodes, const ControllerConfig& cfg,
                         double expert_mean, std::uint64_t seed, int workers) {
  if (episodes < 1) throw UsageError("evaluation needs at least one episode");
  const auto t0 = std::chrono::steady_clock::now();
  const NoiseSpec noise = NoiseSpec::isotropic(noise_level, env.spec.m);
  ControllerConfig inner = cfg;
  inner.workers = 1;
  const RngStream root(seed, 1);
  std::vector<double> returns(episodes);
  detail::parallel_for(episodes, workers, [&](int e) {
    const RngStream ep = root.derive({static_cast<std::uint64_t>(e)});
    RngStream init = ep.derive({0});
    const StateVec x0 = env.sample_initial(init);
    returns[e] = run_episode(*env.model, env.spec.box, inner, cost, env.cost, x0, env.spec.T,
                             noise, ep.derive({1}))
                     .ground_truth_return;
  });
  EvalReport r;
  r.env = env.spec.name;
  r.noise_level = noise_level;
  r.episodes = episodes;
  r.mean_return = mean_of(returns);
  r.std_return = std_of(returns);
  r.expert_mean = expert_mean;
  r.ratio = return_ratio(r.mean_return, expert_mean);
  r.seed = seed;
  r.returns = std::move(returns);
  r.wall_clock_s = seconds_since(t0);
  return r;
}

EvalReport evaluate_policy(const CostParams& params, const Environment& env, double noise_level,
                           int episodes, const ControllerConfig& cfg, double expert_mean,
                           std::uint64_t seed, int workers) {
  if (params.input_dim() != env.spec.n) {
    throw UsageError("cost network input does not match the environment state");
  }
  const LearnedCost cost(params);
  return evaluate_cost(cost, env, noise_level, episodes, cfg, expert_mean, seed, workers);
}

EvalReport expert_reference(const Environment& env, double noise_level, int episodes,
                            const ExpertConfig& expert, std::uint64_t seed, int workers) {
  const GroundTruthTrajectoryCost cost(env.cost, expert.controller.prior_control_weight());
  EvalReport r =
      evaluate_cost(cost, env, noise_level, episodes, expert.controller, 0.0, seed, workers);
  r.expert_mean = r.mean_return;
  r.ratio = return_ratio(r.mean_return, r.expert_mean);
  return r;
}

std::vector<EvalReport> transfer_eval(const CostParams& params, const Environment& env,
                                      const std::vector<double>& levels,
                                      const std::vector<double>& expert_means, int episodes,
                                      const ControllerConfig& cfg, std::uint64_t seed,
                                      int workers) {
  if (levels.size() != expert_means.size()) {
    throw UsageError("one expert reference per noise level is required");
  }
  std::vector<EvalReport> out;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    out.push_back(
        evaluate_policy(params, env, levels[i], episodes, cfg, expert_means[i], seed, workers));
  }
  return out;
}

void write_reports_csv(const std::string& path, const std::vector<EvalReport>& reports) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out << "env,noise_level,episodes,mean_return,std_return,expert_mean_return,ratio,seed\n";
  for (const EvalReport& r : reports) {
    out << r.env << ',' << fmt(r.noise_level) << ',' << r.episodes << ',' << fmt(r.mean_return)
        << ',' << fmt(r.std_return) << ',' << fmt(r.expert_mean) << ',' << fmt(r.ratio) << ','
        << r.seed << '\n';
  }
}

void write_reports_json(const std::string& path, const std::vector<EvalReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const EvalReport& r : reports) {
    arr.push_back({{"env", r.env},
                   {"noise_level", r.noise_level},
                   {"episodes", r.episodes},
                   {"mean_return", r.mean_return},
                   {"std_return", r.std_return},
                   {"expert_mean_return", r.expert_mean},
                   {"ratio", r.ratio},
                   {"seed", r.seed},
                   {"returns", r.returns}});
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out << arr.dump(2) << '\n';
}

std::vector<double> moving_average(const std::vector<double>& v, int w) {
  if (w < 1) throw UsageError("smoothing window must be >= 1");
  std::vector<double> out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    sum += v[i];
    if (i >= static_cast<std::size_t>(w)) sum -= v[i - w];
    out[i] = sum / static_cast<double>(std::min<std::size_t>(i + 1, w));
  }
  return out;
}

int plateau_index(const std::vector<double>& smoothed) {
  if (smoothed.empty()) throw UsageError("empty learning curve");
  const double start = smoothed.front();
  const double target = start + 0.9 * (smoothed.back() - start);
  const bool rising = smoothed.back() >= start;
  for (std::size_t i = 0; i < smoothed.size(); ++i) {
    if (rising ? smoothed[i] >= target : smoothed[i] <= target) return static_cast<int>(i);
  }
  return static_cast<int>(smoothed.size()) - 1;
}

HorizonAblation ablate_horizon(const TrainConfig& base, const DemoSet& demos,
                               const std::vector<int>& Ks, const std::vector<std::uint64_t>& seeds,
                               int smooth_window, int workers) {
  if (Ks.size() < 2) throw UsageError("the horizon ablation needs at least two K values");
  if (seeds.empty()) throw UsageError("the horizon ablation needs at least one seed");
  HorizonAblation out;
  for (int K : Ks) {
    std::vector<std::vector<double>> returns;
    std::vector<std::int64_t> steps;
    for (std::uint64_t seed : seeds) {
      TrainConfig cfg = base;
      cfg.controller.K = K;
      cfg.seed = seed;
      cfg.eval_every = 0;
      const auto t0 = std::chrono::steady_clock::now();
      TrainOptions opts;
      opts.workers = workers;
      TrainResult res = train(cfg, demos, opts);
      HorizonRun run;
      run.K = K;
      run.seed = seed;
      run.seconds = seconds_since(t0);
      std::vector<double> r;
      for (const MetricsRow& m : res.metrics) r.push_back(m.train_return);
      if (!r.empty()) {
        const std::vector<double> sm = moving_average(r, smooth_window);
        run.final_smoothed = sm.back();
        run.steps_to_plateau = res.metrics[plateau_index(sm)].env_steps;
      }
      steps.clear();
      for (const MetricsRow& m : res.metrics) steps.push_back(m.env_steps);
      run.metrics = std::move(res.metrics);
      returns.push_back(std::move(r));
      out.runs.push_back(std::move(run));
    }
    std::vector<CurvePoint> curve;
    for (std::size_t e = 0; e < steps.size(); ++e) {
      std::vector<double> at;
      for (const auto& r : returns) at.push_back(r[e]);
      curve.push_back({static_cast<int>(e), steps[e], mean_of(at), std_of(at)});
    }
    out.curves.emplace_back(K, std::move(curve));
  }
  return out;
}

void write_curves_csv(const std::string& path, const HorizonAblation& ablation) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out << "K,episode,env_steps,mean_return,std\n";
  for (const auto& [K, curve] : ablation.curves) {
    for (const CurvePoint& p : curve) {
      out << K << ',' << p.episode << ',' << p.env_steps << ',' << fmt(p.mean_return) << ','
          << fmt(p.std_return) << '\n';
    }
  }
}

void write_ablation_summary_csv(const std::string& path, const HorizonAblation& ablation) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out << "K,seed,episodes,final_smoothed_return,steps_to_plateau\n";
  for (const HorizonRun& r : ablation.runs) {
    out << r.K << ',' << r.seed << ',' << r.metrics.size() << ',' << fmt(r.final_smoothed) << ','
        << r.steps_to_plateau << '\n';
  }
}

Histogram make_histogram(const Eigen::MatrixXd& samples, const Eigen::VectorXd& lo,
                         const Eigen::VectorXd& hi, int bins) {
  const auto d = samples.rows();
  if (d < 1 || lo.size() != d || hi.size() != d || bins < 1) {
    throw UsageError("histogram box does not match the samples");
  }
  if (samples.cols() == 0) throw UsageError("histogram of no samples");
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.bins = bins;
  h.samples = static_cast<long>(samples.cols());
  Eigen::Index cells = 1;
  for (Eigen::Index i = 0; i < d; ++i) cells *= bins;
  h.mass = Eigen::VectorXd::Zero(cells);
  for (Eigen::Index s = 0; s < samples.cols(); ++s) {
    Eigen::Index cell = 0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double width = hi(i) - lo(i);
      int b = width > 0.0 ? static_cast<int>(std::floor((samples(i, s) - lo(i)) / width * bins))
                          : 0;
      b = std::clamp(b, 0, bins - 1);
      cell = cell * bins + b;
    }
    h.mass(cell) += 1.0;
  }
  h.mass /= static_cast<double>(samples.cols());
  return h;
}

TvEstimate tv_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() == 0 || b.cols() == 0) {
    throw UsageError("tv_distance needs two non-empty sample sets of one dimension");
  }
  const Eigen::VectorXd lo = a.rowwise().minCoeff().cwiseMin(b.rowwise().minCoeff());
  const Eigen::VectorXd hi = a.rowwise().maxCoeff().cwiseMax(b.rowwise().maxCoeff());
  const long samples = static_cast<long>(std::min(a.cols(), b.cols()));
  const int d = static_cast<int>(a.rows());
  TvEstimate est;
  int bins = static_cast<int>(std::ceil(std::cbrt(static_cast<double>(samples)) - 1e-9));
  const int wanted = bins;
  while (bins > 1 && static_cast<double>(samples) / std::pow(bins, d) < 5.0) --bins;
  if (bins != wanted) {
    est.warning = "too few samples for " + std::to_string(wanted) + " bins per dimension; using " +
                  std::to_string(bins);
  }
  est.bins = bins;
  const Histogram ha = make_histogram(a, lo, hi, bins);
  const Histogram hb = make_histogram(b, lo, hi, bins);
  est.d_tv = 0.5 * (ha.mass - hb.mass).cwiseAbs().sum();
  return est;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw UsageError("slope fit needs >= 2 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw UsageError("log-log fit needs positive values");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

TvTrend tv_trend(const Environment& env, const TrajectoryCostModel& learned,
                 const ControllerConfig& learner, const ExpertConfig& expert,
                 const std::vector<int>& Ts, int episodes, std::uint64_t seed, int workers) {
  if (Ts.size() < 2) throw UsageError("the trend fit needs at least two horizons");
  if (episodes < 1) throw UsageError("episodes must be >= 1");
  const GroundTruthTrajectoryCost truth(env.cost, expert.controller.prior_control_weight());
  const NoiseSpec none = NoiseSpec::isotropic(0.0, env.spec.m);
  ControllerConfig lcfg = learner;
  lcfg.workers = 1;
  ControllerConfig ecfg = expert.controller;
  ecfg.workers = 1;
  TvTrend trend;
  std::vector<double> xs, ys;
  for (int T : Ts) {
    if (T < 1) throw UsageError("episode length must be >= 1");
    Eigen::MatrixXd exp_states(env.spec.n, static_cast<Eigen::Index>(episodes) * T);
    Eigen::MatrixXd learned_states(env.spec.n, static_cast<Eigen::Index>(episodes) * T);
    const RngStream root(seed, 3);
    detail::parallel_for(episodes, workers, [&](int e) {
      const RngStream ep = root.derive({static_cast<std::uint64_t>(T), static_cast<std::uint64_t>(e)});
      RngStream init = ep.derive({0});
      const StateVec x0 = env.sample_initial(init);
      const EpisodeResult er =
          run_episode(*env.model, env.spec.box, ecfg, truth, env.cost, x0, T, none, ep.derive({1}));
      const EpisodeResult lr =
          run_episode(*env.model, env.spec.box, lcfg, learned, env.cost, x0, T, none, ep.derive({2}));
      exp_states.middleCols(static_cast<Eigen::Index>(e) * T, T) = er.states;
      learned_states.middleCols(static_cast<Eigen::Index>(e) * T, T) = lr.states;
    });
    const TvEstimate est = tv_distance(exp_states, learned_states);
    TvPoint p;
    p.T = T;
    p.d_tv = est.d_tv;
    p.cumulative = T * est.d_tv;
    p.samples = static_cast<long>(exp_states.cols());
    p.warning = est.warning;
    trend.points.push_back(p);
    xs.push_back(T);
    ys.push_back(std::max(p.cumulative, 1e-12));
  }
  trend.slope = loglog_slope(xs, ys);
  return trend;
}

void write_tv_csv(const std::string& path, const TvTrend& trend) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out << "T,samples,d_tv,cumulative_tv,loglog_slope\n";
  for (const TvPoint& p : trend.points) {
    out << p.T << ',' << p.samples << ',' << fmt(p.d_tv) << ',' << fmt(p.cumulative) << ','
        << fmt(trend.slope) << '\n';
  }
}

}  // namespace rhirl
