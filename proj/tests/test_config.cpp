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

#include "rhirl/config.hpp"

#include <doctest.h>

#include <cstdlib>
#include <string>

using namespace rhirl;

namespace {

std::string source_path(const std::string& rel) { return std::string(RHIRL_SOURCE_DIR) + "/" + rel; }

}  // namespace

TEST_CASE("defaults for a bare config") {
  const RunConfig c = parse_run_config("env = double-integrator\n");
  CHECK(c.env == "double-integrator");
  CHECK(c.train.env == "double-integrator");
  CHECK(c.seed == 1);
  CHECK(c.demo_count == 20);
  CHECK(c.eval_noise_levels == std::vector<double>{0.0, 0.2, 0.5});
  CHECK(c.ablation_K == std::vector<int>{5, 20, 100});
  CHECK(c.bound_T == std::vector<int>{25, 50, 100, 200});
  CHECK(c.train.controller.explore_prob == 0.0);
  CHECK(c.expert.controller.M == 256);
}

TEST_CASE("shipped pendulum config carries the reference learner settings") {
  const RunConfig c = load_run_config(source_path("configs/pendulum.ini"));
  CHECK(c.train.controller.K == 20);
  CHECK(c.train.controller.beta == 0.8);
  CHECK(c.train.batch_size == 50);
  CHECK(c.train.controller.lambda == 0.1);
  CHECK(c.train.lr == 1e-4);
  CHECK(c.train.weight_decay == 8e-5);
  const long long steps = static_cast<long long>(c.train.episodes) * 100 *
                          (c.train.controller.M * c.train.controller.K + 1);
  CHECK(steps <= 2000000);
}

TEST_CASE("every shipped config loads") {
  for (const char* name : {"configs/pendulum.ini", "configs/double-integrator.ini",
                           "configs/cartpole-swingup.ini"}) {
    CAPTURE(name);
    CHECK_NOTHROW(load_run_config(source_path(name)));
  }
}

TEST_CASE("values, lists and booleans") {
  const RunConfig c = parse_run_config(
      "env = cartpole-swingup\nseed = 42\n"
      "[controller]\nK = 12\nsmoothing = off\n"
      "[trainer]\nhidden = 16, 8\ngrad_weighting = as-printed\noptimizer = sgd\n"
      "[eval]\nnoise_levels = 0.1,0.3\n"
      "[ablation]\nK_values = 3,9\nseeds = 7,8\n"
      "[paths]\nreports = out/r\n");
  CHECK(c.seed == 42);
  CHECK(c.train.seed == 42);
  CHECK(c.train.controller.K == 12);
  CHECK_FALSE(c.train.controller.smoothing.enabled);
  CHECK(c.train.hidden == std::vector<int>{16, 8});
  CHECK(c.train.grad_weighting == GradWeighting::kAsPrinted);
  CHECK(c.train.optimizer == OptimizerKind::kSgd);
  CHECK(c.eval_noise_levels == std::vector<double>{0.1, 0.3});
  CHECK(c.ablation_seeds == std::vector<std::uint64_t>{7, 8});
  CHECK(c.reports_dir == "out/r");
}

TEST_CASE("configuration errors") {
  CHECK_THROWS_AS(parse_run_config("env = mountain-car\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("env = pendulum\ncolour = blue\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("env = pendulum\n[trainer]\nlearning_rate = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("env = pendulum\n[extras]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("env = pendulum\n[controller]\nK = abc\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("env = pendulum\n[controller]\nM = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("env = pendulum\n[controller]\nK = 500\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("env = pendulum\n[controller]\nsmoothing = maybe\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("env = pendulum\n[trainer]\noptimizer = lbfgs\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("env = pendulum\n[bound]\nT_values = 50\n"), ConfigError);
  CHECK_THROWS_AS(load_run_config("/nonexistent/run.ini"), ConfigError);
}

TEST_CASE("seed override from the environment") {
  RunConfig c = parse_run_config("env = pendulum\nseed = 3\n");
  ::setenv("RHIRL_SEED", "17", 1);
  apply_environment_overrides(c);
  CHECK(c.seed == 17);
  CHECK(c.train.seed == 17);
  ::setenv("RHIRL_SEED", "x17", 1);
  CHECK_THROWS_AS(apply_environment_overrides(c), ConfigError);
  ::unsetenv("RHIRL_SEED");
  apply_environment_overrides(c);
  CHECK(c.seed == 17);
}
