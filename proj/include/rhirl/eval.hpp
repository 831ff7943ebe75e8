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
#include "rhirl/trainer.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rhirl {

/// Ground-truth return statistics of one evaluation condition.
struct EvalReport {
  std::string env;
  double noise_level = 0.0;
  int episodes = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
  double expert_mean = 0.0;
  double ratio = 0.0;
  /// Not written to report files, which must be reproducible byte for byte.
  double wall_clock_s = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> returns;
};

/// Learned-over-expert return ratio, clipped at 0. Returns here are negated
/// costs, so for a negative expert return the ratio is expert / learned:
/// 1 means expert parity and values above 1 mean the learner did better.
double return_ratio(double mean, double expert_mean);

/// Run `episodes` MPPI episodes under `cost` at execution noise `noise_level`.
/// Episode e starts from RngStream(seed, 1).derive({e}); the start states
/// depend only on (seed, e), so different costs are compared on the same starts.
EvalReport evaluate_cost(const TrajectoryCostModel& cost, const Environment& env,
                         double noise_level, int episodes, const ControllerConfig& cfg,
                         double expert_mean, std::uint64_t seed, int workers = 1);

EvalReport evaluate_policy(const CostParams& params, const Environment& env, double noise_level,
                           int episodes, const ControllerConfig& cfg, double expert_mean,
                           std::uint64_t seed, int workers = 1);

/// The ground-truth MPPI expert scored on the same episode starts (ratio 1 by construction).
EvalReport expert_reference(const Environment& env, double noise_level, int episodes,
                            const ExpertConfig& expert, std::uint64_t seed, int workers = 1);

/// Re-optimise a fixed learned cost at each execution noise level. expert_means
/// is co-indexed with levels.
std::vector<EvalReport> transfer_eval(const CostParams& params, const Environment& env,
                                      const std::vector<double>& levels,
                                      const std::vector<double>& expert_means, int episodes,
                                      const ControllerConfig& cfg, std::uint64_t seed,
                                      int workers = 1);

void write_reports_csv(const std::string& path, const std::vector<EvalReport>& reports);
void write_reports_json(const std::string& path, const std::vector<EvalReport>& reports);

/// Trailing moving average with window `w` (shorter at the start).
std::vector<double> moving_average(const std::vector<double>& v, int w);

/// Index of the first smoothed value reaching start + 0.9 (final - start).
int plateau_index(const std::vector<double>& smoothed);

struct HorizonRun {
  int K = 0;
  std::uint64_t seed = 0;
  std::vector<MetricsRow> metrics;
  double final_smoothed = 0.0;
  std::int64_t steps_to_plateau = 0;
  double seconds = 0.0;
};

struct CurvePoint {
  int episode = 0;
  std::int64_t env_steps = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
};

struct HorizonAblation {
  std::vector<HorizonRun> runs;  // K-major, then seed
  /// One learning curve per K, averaged over seeds.
  std::vector<std::pair<int, std::vector<CurvePoint>>> curves;
};

/// Train one model per (K, seed) with the same episode budget as base.episodes.
HorizonAblation ablate_horizon(const TrainConfig& base, const DemoSet& demos,
                               const std::vector<int>& Ks, const std::vector<std::uint64_t>& seeds,
                               int smooth_window = 5, int workers = 1);

void write_curves_csv(const std::string& path, const HorizonAblation& ablation);
void write_ablation_summary_csv(const std::string& path, const HorizonAblation& ablation);

/// Normalised histogram over a box [lo, hi] with `bins` cells per dimension.
struct Histogram {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
  int bins = 0;
  Eigen::VectorXd mass;  // row-major over dimensions
  long samples = 0;
};

Histogram make_histogram(const Eigen::MatrixXd& samples, const Eigen::VectorXd& lo,
                         const Eigen::VectorXd& hi, int bins);

struct TvEstimate {
  double d_tv = 0.0;
  int bins = 0;
  /// Set when the bin count had to be reduced for lack of samples.
  std::string warning;
};

/// Half the L1 distance between histograms of two d x S sample sets on a
/// shared box; ceil(cbrt(S)) bins per dimension, reduced while the mean count
/// per cell is below 5.
TvEstimate tv_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct TvPoint {
  int T = 0;
  double d_tv = 0.0;
  /// T * d_tv: distance between the unnormalised (summed) state marginals.
  double cumulative = 0.0;
  long samples = 0;
  std::string warning;
};

struct TvTrend {
  std::vector<TvPoint> points;
  double slope = 0.0;
};

/// Expert vs learned-cost state marginals for each episode length in Ts.
TvTrend tv_trend(const Environment& env, const TrajectoryCostModel& learned,
                 const ControllerConfig& learner, const ExpertConfig& expert,
                 const std::vector<int>& Ts, int episodes, std::uint64_t seed, int workers = 1);

void write_tv_csv(const std::string& path, const TvTrend& trend);

}  // namespace rhirl
