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

#include "lqr_oracle.hpp"
#include "rhirl/demos.hpp"

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

using namespace rhirl;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("rhirl_test_" + name)).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << bytes;
}

}  // namespace

TEST_CASE("double-integrator expert is close to the LQR optimum") {
  const Environment env = make_double_integrator();
  const ExpertConfig expert = default_expert_config(env.spec.name);
  const DemoSet d = generate_demos(env, 0.0, 10, expert, 7);
  const testing::FiniteLqr lqr = testing::double_integrator_lqr(env.spec.T);
  double lqr_total = 0.0;
  for (const Trajectory& tau : d.trajectories) lqr_total += lqr.cost(tau.col(0));
  const double expert_cost = -d.expert_mean;
  const double lqr_mean = lqr_total / d.count();
  CHECK(expert_cost >= lqr_mean * (1.0 - 1e-9));
  CHECK(expert_cost <= 1.1 * lqr_mean);
}

TEST_CASE("pendulum expert return is near the reference value") {
  const Environment env = make_pendulum();
  const DemoSet d = generate_demos(env, 0.0, 20, default_expert_config(env.spec.name), 1);
  // Reference return -154.69 with a 35% allowance.
  CHECK(d.expert_mean >= -154.69 * 1.35);
  CHECK(d.expert_mean <= -154.69 * 0.65);
}

TEST_CASE("demo files round trip exactly and regenerate byte for byte") {
  const Environment env = make_double_integrator();
  const ExpertConfig expert = default_expert_config(env.spec.name);
  const DemoSet d = generate_demos(env, 0.2, 3, expert, 11, 2);
  CHECK(d.count() == 3);
  CHECK(d.T == env.spec.T);
  CHECK(d.trajectories[0].rows() == env.spec.n);

  const std::string a = temp_path("demos_a.bin");
  const std::string b = temp_path("demos_b.bin");
  save_demos(a, d);
  const DemoSet back = load_demos(a, env);
  CHECK(back.env == d.env);
  CHECK(back.noise_level == d.noise_level);
  CHECK(back.seed == 11);
  CHECK(back.expert_mean == d.expert_mean);
  CHECK(back.expert_std == d.expert_std);
  REQUIRE(back.count() == 3);
  for (int i = 0; i < 3; ++i) CHECK(back.trajectories[i] == d.trajectories[i]);

  // States only: the payload holds exactly N * T * n doubles.
  const std::string bytes = slurp(a);
  const std::size_t payload = sizeof(double) * 3 * env.spec.T * env.spec.n;
  CHECK(bytes.size() > payload);
  CHECK(std::filesystem::exists(a + ".json"));

  save_demos(b, generate_demos(env, 0.2, 3, expert, 11, 1));
  CHECK(slurp(b) == bytes);
  CHECK(slurp(b + ".json") == slurp(a + ".json"));

  for (const auto& p : {a, b}) {
    std::filesystem::remove(p);
    std::filesystem::remove(p + ".json");
  }
}

TEST_CASE("payload size excludes controls") {
  const Environment env = make_double_integrator();
  DemoSet d;
  d.env = env.spec.name;
  d.n = 2;
  d.m = 1;
  d.T = env.spec.T;
  d.dt = env.spec.dt;
  d.trajectories.assign(2, Eigen::MatrixXd::Ones(2, d.T));
  const std::string p = temp_path("size.bin");
  save_demos(p, d);
  const std::string bytes = slurp(p);
  // magic(8) + version(4) + header length(8) + header + payload.
  std::uint64_t header_len = 0;
  std::memcpy(&header_len, bytes.data() + 12, sizeof(header_len));
  CHECK(bytes.size() == 20 + header_len + sizeof(double) * 2 * d.T * 2);
  std::filesystem::remove(p);
  std::filesystem::remove(p + ".json");
}

TEST_CASE("guards on loading") {
  const Environment di = make_double_integrator();
  DemoSet d;
  d.env = di.spec.name;
  d.n = 2;
  d.m = 1;
  d.T = di.spec.T;
  d.trajectories.assign(1, Eigen::MatrixXd::Zero(2, d.T));
  const std::string p = temp_path("guard.bin");
  save_demos(p, d);
  CHECK_NOTHROW(load_demos(p, di));
  CHECK_THROWS_AS(load_demos(p, make_cartpole_swingup()), DemoMismatchError);

  DemoSet shorter = d;
  shorter.T = d.T - 1;
  shorter.trajectories.assign(1, Eigen::MatrixXd::Zero(2, shorter.T));
  save_demos(p, shorter);
  CHECK_THROWS_AS(load_demos(p, di), DemoMismatchError);

  save_demos(p, d);
  std::string bytes = slurp(p);
  spit(p, bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(load_demos(p), FormatError);
  spit(p, bytes + "x");
  CHECK_THROWS_AS(load_demos(p), FormatError);
  std::string bad = bytes;
  bad[25] = '#';
  spit(p, bad);
  CHECK_THROWS_AS(load_demos(p), FormatError);
  spit(p, "not a demo file");
  CHECK_THROWS_AS(load_demos(p), FormatError);
  CHECK_THROWS_AS(load_demos(temp_path("missing.bin")), FormatError);

  std::filesystem::remove(p);
  std::filesystem::remove(p + ".json");
}

TEST_CASE("expert below the sanity floor aborts generation") {
  const Environment env = make_pendulum();
  ExpertConfig weak = default_expert_config(env.spec.name);
  weak.controller.M = 2;
  weak.controller.K = 2;
  weak.sanity_floor = -1.0;
  CHECK_THROWS_AS(generate_demos(env, 0.0, 1, weak, 1, 1, 20), GenerationError);
  CHECK_THROWS_AS(generate_demos(env, 0.0, 0, weak, 1), UsageError);
  CHECK_THROWS_AS(default_expert_config("mountain-car"), UsageError);
}
