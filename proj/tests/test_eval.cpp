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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

using namespace rhirl;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("rhirl_test_" + name)).string();
}

double normal_pdf(double x, double mu) {
  return std::exp(-0.5 * (x - mu) * (x - mu)) / std::sqrt(2.0 * M_PI);
}

ControllerConfig fast_controller() {
  ControllerConfig c;
  c.K = 10;
  c.M = 16;
  c.lambda = 0.3;
  c.beta = 0.8;
  c.explore_prob = 0.0;
  return c;
}

}  // namespace

TEST_CASE("return ratio") {
  CHECK(return_ratio(-150.0, -150.0) == 1.0);
  CHECK(return_ratio(-300.0, -150.0) == 0.5);
  CHECK(return_ratio(-75.0, -150.0) == 2.0);
  CHECK(return_ratio(5.0, -150.0) == std::numeric_limits<double>::infinity());
  CHECK(return_ratio(50.0, 100.0) == 0.5);
  CHECK(return_ratio(-50.0, 100.0) == 0.0);
}

TEST_CASE("moving average and plateau") {
  const std::vector<double> v{1, 2, 3, 4, 5};
  const std::vector<double> s = moving_average(v, 3);
  REQUIRE(s.size() == 5);
  CHECK(s[0] == 1.0);
  CHECK(s[1] == 1.5);
  CHECK(s[2] == 2.0);
  CHECK(s[4] == 4.0);
  CHECK(moving_average(v, 1) == v);

  // start 0, final 10: the first value >= 9.
  CHECK(plateau_index({0, 2, 5, 8, 9.5, 9, 10}) == 4);
  CHECK(plateau_index({-10, -10, -10}) == 0);
  // Decreasing curves plateau on the way down.
  CHECK(plateau_index({0, -5, -9.5, -10}) == 2);
}

TEST_CASE("log-log slope") {
  const std::vector<double> x{25, 50, 100, 200};
  std::vector<double> lin, quad;
  for (const double t : x) {
    lin.push_back(3.0 * t);
    quad.push_back(0.1 * t * t);
  }
  CHECK(loglog_slope(x, lin) == doctest::Approx(1.0));
  CHECK(loglog_slope(x, quad) == doctest::Approx(2.0));
}

TEST_CASE("histogram") {
  Eigen::MatrixXd s(2, 4);
  s << 0.0, 0.9, 0.1, 1.0,
       0.0, 0.0, 0.9, 1.0;
  const Histogram h = make_histogram(s, Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1), 2);
  REQUIRE(h.mass.size() == 4);
  CHECK(h.mass.sum() == doctest::Approx(1.0));
  CHECK(h.mass.minCoeff() == doctest::Approx(0.25));
  CHECK(h.samples == 4);
}

TEST_CASE("total variation of identical samples is zero") {
  RngStream rng(1, 0);
  Eigen::MatrixXd a(2, 5000);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
  const TvEstimate e = tv_distance(a, a);
  CHECK(e.d_tv == 0.0);
  CHECK(e.bins >= 1);
}

TEST_CASE("total variation between two Gaussians matches quadrature") {
  // 0.5 * integral |N(0,1) - N(1,1)| by the midpoint rule.
  double integral = 0.0;
  const double h = 1e-4;
  for (double x = -12.0; x < 13.0; x += h) {
    integral += std::abs(normal_pdf(x + 0.5 * h, 0.0) - normal_pdf(x + 0.5 * h, 1.0)) * h;
  }
  const double exact = 0.5 * integral;
  CHECK(exact == doctest::Approx(std::erf(0.25 / std::sqrt(0.5))).epsilon(1e-6));

  RngStream rng(2, 0);
  const int S = 400000;
  Eigen::MatrixXd a(1, S), b(1, S);
  for (int i = 0; i < S; ++i) {
    a(0, i) = rng.normal();
    b(0, i) = 1.0 + rng.normal();
  }
  const TvEstimate est = tv_distance(a, b);
  CHECK(std::abs(est.d_tv - exact) < 0.02);
  CHECK(est.warning.empty());
}

TEST_CASE("sparse samples reduce the bin count with a warning") {
  RngStream rng(3, 0);
  Eigen::MatrixXd a(3, 40), b(3, 40);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    a.data()[i] = rng.normal();
    b.data()[i] = rng.normal();
  }
  const TvEstimate est = tv_distance(a, b);
  CHECK(!est.warning.empty());
  CHECK(40.0 / std::pow(est.bins, 3) >= 5.0);
}

TEST_CASE("ground truth plugged in as the learned cost reproduces the expert") {
  const Environment env = make_pendulum();
  ExpertConfig expert;
  expert.controller = fast_controller();
  const EvalReport ref = expert_reference(env, 0.0, 3, expert, 5);
  CHECK(ref.ratio == 1.0);
  CHECK(ref.returns.size() == 3);

  const GroundTruthTrajectoryCost truth(env.cost, expert.controller.prior_control_weight());
  const EvalReport same = evaluate_cost(truth, env, 0.0, 3, expert.controller, ref.mean_return, 5, 2);
  CHECK(same.mean_return == ref.mean_return);
  CHECK(same.ratio == doctest::Approx(1.0));
}

TEST_CASE("transfer at zero noise equals a plain evaluation") {
  const Environment env = make_double_integrator();
  RngStream rng(4, 0);
  const CostParams p = CostParams::init(2, {8, 8}, rng);
  const ControllerConfig cfg = fast_controller();
  const EvalReport direct = evaluate_policy(p, env, 0.0, 2, cfg, -10.0, 9);
  const std::vector<EvalReport> t = transfer_eval(p, env, {0.0, 0.3}, {-10.0, -12.0}, 2, cfg, 9);
  REQUIRE(t.size() == 2);
  CHECK(t[0].returns == direct.returns);
  CHECK(t[0].ratio == direct.ratio);
  CHECK(t[1].noise_level == 0.3);
  CHECK(t[1].expert_mean == -12.0);
  CHECK_THROWS_AS(transfer_eval(p, env, {0.0}, {}, 2, cfg, 9), UsageError);

  const std::string csv = temp_path("reports.csv");
  const std::string json = temp_path("reports.json");
  write_reports_csv(csv, t);
  write_reports_json(json, t);
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header.find("ratio") != std::string::npos);
  CHECK(header.find("wall") == std::string::npos);
  std::filesystem::remove(csv);
  std::filesystem::remove(json);
}

TEST_CASE("evaluation does not depend on the worker count") {
  const Environment env = make_double_integrator();
  RngStream rng(5, 0);
  const CostParams p = CostParams::init(2, {8, 8}, rng);
  const EvalReport a = evaluate_policy(p, env, 0.2, 4, fast_controller(), -10.0, 3, 1);
  const EvalReport b = evaluate_policy(p, env, 0.2, 4, fast_controller(), -10.0, 3, 4);
  CHECK(a.returns == b.returns);
}
