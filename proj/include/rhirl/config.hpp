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

#include "rhirl/demos.hpp"
#include "rhirl/trainer.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rhirl {

/// Invalid or inconsistent run configuration.
class ConfigError : public UsageError {
 public:
  using UsageError::UsageError;
};

/// Contents of one run configuration file (INI sections: top level,
/// [controller], [trainer], [expert], [demo], [eval], [ablation], [bound], [paths]).
struct RunConfig {
  std::string env = "pendulum";
  std::uint64_t seed = 1;
  int workers = 1;

  /// Learner: controller and optimizer settings. train.env, train.seed and
  /// train.env_noise mirror env, seed and demo_noise.
  TrainConfig train;

  ExpertConfig expert;
  int demo_count = 20;
  double demo_noise = 0.0;

  int eval_episodes = 10;
  std::vector<double> eval_noise_levels = {0.0, 0.2, 0.5};
  std::vector<double> transfer_levels = {0.2, 0.5};

  std::vector<int> ablation_K = {5, 20, 100};
  std::vector<std::uint64_t> ablation_seeds = {1, 2, 3};
  int ablation_smooth = 5;

  std::vector<int> bound_T = {25, 50, 100, 200};
  int bound_episodes = 20;

  std::string demos_path = "demos.bin";
  std::string checkpoint_path = "checkpoint.json";
  std::string reports_dir = "reports";

  /// Cross-field checks; throws ConfigError.
  void validate() const;
};

/// Parse an INI file. Unknown sections or keys, malformed values and
/// constraint violations raise ConfigError.
RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& text);

/// RHIRL_SEED, when set, replaces the configured seed.
void apply_environment_overrides(RunConfig& cfg);

}  // namespace rhirl
