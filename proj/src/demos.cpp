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

#include "rhirl/demos.hpp"

#include "parallel.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace rhirl {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'R', 'H', 'I', 'R', 'L', 'D', 'E', 'M'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "demo files are written as little-endian doubles");

json controller_to_json(const ControllerConfig& c) {
  return json{{"K", c.K},
              {"M", c.M},
              {"lambda", c.lambda},
              {"beta", c.beta},
              {"explore_prob", c.explore_prob},
              {"smoothing", c.smoothing.enabled},
              {"smoothing_window", c.smoothing.window},
              {"smoothing_order", c.smoothing.order}};
}

json header_json(const DemoSet& d) {
  json generator = d.generator.empty() ? json::object() : json::parse(d.generator);
  return json{{"format", "rhirl-demos"},
              {"version", kVersion},
              {"env", d.env},
              {"n", d.n},
              {"m", d.m},
              {"T", d.T},
              {"dt", d.dt},
              {"noise_level", d.noise_level},
              {"N", d.count()},
              {"seed", d.seed},
              {"expert_mean_return", d.expert_mean},
              {"expert_std_return", d.expert_std},
              {"generator", generator}};
}

template <class T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw FormatError("demo file truncated");
  return v;
}

}  // namespace

ExpertConfig default_expert_config(const std::string& env) {
  ExpertConfig e;
  ControllerConfig& c = e.controller;
  c.explore_prob = 0.0;
  if (env == "pendulum") {
    c.K = 20;
    c.M = 128;
    c.lambda = 0.3;
    c.beta = 0.8;
    e.sanity_floor = -400.0;
  } else if (env == "double-integrator") {
    c.K = 20;
    c.M = 256;
    c.lambda = 0.16;
    c.beta = 1.6;
    e.sanity_floor = -50.0;
  } else if (env == "cartpole-swingup") {
    c.K = 20;
    c.M = 256;
    c.lambda = 0.1;
    c.beta = 25.0;
    e.sanity_floor = -300.0;
  } else {
    throw UsageError("unknown environment '" + env + "'");
  }
  return e;
}

DemoSet generate_demos(const Environment& env, double noise_level, int count,
                       const ExpertConfig& expert, std::uint64_t seed, int workers, int T) {
  if (count < 1) throw UsageError("demo count must be >= 1");
  if (!(noise_level >= 0.0)) throw UsageError("noise level must be >= 0");
  expert.controller.validate();
  const int horizon = T > 0 ? T : env.spec.T;
  const NoiseSpec true_noise = NoiseSpec::isotropic(noise_level, env.spec.m);
  const GroundTruthTrajectoryCost cost(env.cost, expert.controller.prior_control_weight());
  ControllerConfig inner = expert.controller;
  inner.workers = 1;

  DemoSet d;
  d.env = env.spec.name;
  d.n = env.spec.n;
  d.m = env.spec.m;
  d.T = horizon;
  d.dt = env.spec.dt;
  d.noise_level = noise_level;
  d.seed = seed;
  d.trajectories.resize(count);
  Eigen::VectorXd returns(count);

  const RngStream root(seed, 0);
  detail::parallel_for(count, workers, [&](int i) {
    RngStream ep = root.derive({static_cast<std::uint64_t>(i)});
    RngStream init = ep.derive({0});
    const StateVec x0 = env.sample_initial(init);
    EpisodeResult r = run_episode(*env.model, env.spec.box, inner, cost, env.cost, x0, horizon,
                                  true_noise, ep.derive({1}));
    d.trajectories[i] = std::move(r.states);
    returns(i) = r.ground_truth_return;
  });

  d.expert_mean = returns.mean();
  d.expert_std = count > 1 ? std::sqrt((returns.array() - d.expert_mean).square().sum() /
                                       static_cast<double>(count - 1))
                           : 0.0;
  json gen = controller_to_json(expert.controller);
  gen["expert"] = "mppi-ground-truth";
  gen["sanity_floor"] = expert.sanity_floor;
  d.generator = gen.dump();
  if (d.expert_mean < expert.sanity_floor) {
    throw GenerationError("expert mean return " + std::to_string(d.expert_mean) +
                          " is below the sanity floor " + std::to_string(expert.sanity_floor));
  }
  return d;
}

void save_demos(const std::string& path, const DemoSet& d) {
  for (const Trajectory& tr : d.trajectories) {
    if (tr.rows() != d.n || tr.cols() != d.T) {
      throw UsageError("demo trajectory shape does not match the header");
    }
  }
  const std::string header = header_json(d).dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kVersion);
  write_pod(out, static_cast<std::uint64_t>(header.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  // Row-major N x T x n: each state is contiguous, i.e. the column of an n x T matrix.
  for (const Trajectory& tr : d.trajectories) {
    out.write(reinterpret_cast<const char*>(tr.data()),
              static_cast<std::streamsize>(sizeof(double) * tr.size()));
  }
  if (!out) throw FormatError("failed writing '" + path + "'");
  out.close();

  std::ofstream side(path + ".json", std::ios::trunc);
  if (!side) throw FormatError("cannot open '" + path + ".json' for writing");
  side << header_json(d).dump(2) << '\n';
}

DemoSet load_demos(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open demo file '" + path + "'");
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("'" + path + "' is not a demo file");
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kVersion) {
    throw FormatError("unsupported demo file version " + std::to_string(version));
  }
  const auto header_len = read_pod<std::uint64_t>(in);
  if (header_len > (1u << 24)) throw FormatError("demo header too large");
  std::string header(header_len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw FormatError("demo header truncated");

  DemoSet d;
  int count = 0;
  try {
    const json h = json::parse(header);
    if (h.at("format") != "rhirl-demos") throw FormatError("bad demo header format tag");
    d.env = h.at("env").get<std::string>();
    d.n = h.at("n").get<int>();
    d.m = h.at("m").get<int>();
    d.T = h.at("T").get<int>();
    d.dt = h.at("dt").get<double>();
    d.noise_level = h.at("noise_level").get<double>();
    count = h.at("N").get<int>();
    d.seed = h.at("seed").get<std::uint64_t>();
    d.expert_mean = h.at("expert_mean_return").get<double>();
    d.expert_std = h.at("expert_std_return").get<double>();
    d.generator = h.at("generator").dump();
  } catch (const json::exception& e) {
    throw FormatError(std::string("corrupt demo header: ") + e.what());
  }
  if (d.n < 1 || d.T < 1 || count < 0) throw FormatError("corrupt demo header dimensions");

  d.trajectories.resize(count);
  for (auto& tr : d.trajectories) {
    tr.resize(d.n, d.T);
    in.read(reinterpret_cast<char*>(tr.data()),
            static_cast<std::streamsize>(sizeof(double) * tr.size()));
    if (!in) throw FormatError("demo payload truncated");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("trailing bytes after demo payload");
  }
  return d;
}

void check_demos(const DemoSet& d, const Environment& env) {
  if (d.env != env.spec.name) {
    throw DemoMismatchError("demos were recorded on '" + d.env + "', not '" + env.spec.name + "'");
  }
  if (d.n != env.spec.n || d.m != env.spec.m) {
    throw DemoMismatchError("demo state/control dimensions do not match " + env.spec.name);
  }
  if (d.T != env.spec.T) {
    throw DemoMismatchError("demo length T=" + std::to_string(d.T) + " does not match " +
                            env.spec.name + " (T=" + std::to_string(env.spec.T) + ")");
  }
  if (d.count() == 0) throw DemoMismatchError("demo set is empty");
}

DemoSet load_demos(const std::string& path, const Environment& env) {
  DemoSet d = load_demos(path);
  check_demos(d, env);
  return d;
}

}  // namespace rhirl
