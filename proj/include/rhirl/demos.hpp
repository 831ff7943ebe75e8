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

#include "rhirl/core.hpp"
#include "rhirl/environments.hpp"
#include "rhirl/mppi.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rhirl {

/// Loaded demonstrations do not fit the environment they are used with.
class DemoMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// The expert failed the configured sanity floor.
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// State-only expert demonstrations. Each trajectory is n x T (x_0 .. x_{T-1}).
struct DemoSet {
  std::string env;
  int n = 0;
  int m = 0;
  int T = 0;
  double dt = 0.0;
  double noise_level = 0.0;
  std::uint64_t seed = 0;
  double expert_mean = 0.0;
  double expert_std = 0.0;
  /// Expert controller settings as a JSON object string.
  std::string generator;
  std::vector<Trajectory> trajectories;

  int count() const { return static_cast<int>(trajectories.size()); }
};

struct ExpertConfig {
  ControllerConfig controller;
  /// Returns below this mean abort generation.
  double sanity_floor = -1e300;
};

/// Tuned MPPI expert for a named environment.
ExpertConfig default_expert_config(const std::string& env);

/// Roll out `count` expert episodes on the ground-truth cost with commanded
/// controls corrupted by N(0, noise_level I) before clamping. Episode i uses
/// RngStream(seed, 0).derive({i}). `T` overrides the episode length when > 0.
DemoSet generate_demos(const Environment& env, double noise_level, int count,
                       const ExpertConfig& expert, std::uint64_t seed, int workers = 1,
                       int T = 0);

/// Binary file plus `<path>.json` sidecar.
void save_demos(const std::string& path, const DemoSet& demos);
/// FormatError on a corrupt or truncated file.
DemoSet load_demos(const std::string& path);
/// As above and checks env name, dimensions and T against `env` (DemoMismatchError).
DemoSet load_demos(const std::string& path, const Environment& env);
void check_demos(const DemoSet& demos, const Environment& env);

}  // namespace rhirl
