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

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace rhirl {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"", {"env", "seed", "workers"}},
      {"controller",
       {"K", "M", "lambda", "beta", "explore_prob", "smoothing", "smoothing_window",
        "smoothing_order", "stochastic_samples"}},
      {"trainer",
       {"lr", "weight_decay", "batch_size", "episodes", "grad_weighting", "optimizer", "hidden",
        "eval_every", "eval_explore_prob", "param_ema"}},
      {"expert", {"K", "M", "lambda", "beta", "explore_prob", "sanity_floor"}},
      {"demo", {"count", "noise_level"}},
      {"eval", {"episodes", "noise_levels", "transfer_levels"}},
      {"ablation", {"K_values", "seeds", "smooth_window"}},
      {"bound", {"T_values", "episodes"}},
      {"paths", {"demos", "checkpoint", "reports"}},
  };
  return s;
}

void check_keys(const pt::ptree& tree) {
  const auto& s = schema();
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      if (!s.at("").count(name)) throw ConfigError("unknown top-level key '" + name + "'");
      continue;
    }
    auto sec = s.find(name);
    if (sec == s.end() || name.empty()) throw ConfigError("unknown section [" + name + "]");
    for (const auto& [key, value] : node) {
      if (!sec->second.count(key)) {
        throw ConfigError("unknown key '" + key + "' in [" + name + "]");
      }
      if (!value.empty()) throw ConfigError("nested value under [" + name + "] " + key);
    }
  }
}

template <class T>
void read(const pt::ptree& tree, const std::string& path, T& out) {
  auto node = tree.get_child_optional(path);
  if (!node) return;
  auto v = node->get_value_optional<T>();
  if (!v) throw ConfigError("cannot parse '" + path + "' = '" + node->data() + "'");
  out = *v;
}

void read_bool(const pt::ptree& tree, const std::string& path, bool& out) {
  auto node = tree.get_child_optional(path);
  if (!node) return;
  const std::string s = node->data();
  if (s == "true" || s == "1" || s == "on" || s == "yes") {
    out = true;
  } else if (s == "false" || s == "0" || s == "off" || s == "no") {
    out = false;
  } else {
    throw ConfigError("cannot parse '" + path + "' = '" + s + "' as a boolean");
  }
}

template <class T>
void read_list(const pt::ptree& tree, const std::string& path, std::vector<T>& out) {
  auto node = tree.get_child_optional(path);
  if (!node) return;
  std::vector<T> values;
  std::stringstream ss(node->data());
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError("empty list item in '" + path + "'");
    std::istringstream is(item.substr(b, e - b + 1));
    T v{};
    if (!(is >> v) || !is.eof()) {
      throw ConfigError("cannot parse list item '" + item + "' in '" + path + "'");
    }
    values.push_back(v);
  }
  if (values.empty()) throw ConfigError("'" + path + "' must not be empty");
  out = std::move(values);
}

void read_controller(const pt::ptree& tree, const std::string& sec, ControllerConfig& c) {
  read(tree, sec + ".K", c.K);
  read(tree, sec + ".M", c.M);
  read(tree, sec + ".lambda", c.lambda);
  read(tree, sec + ".beta", c.beta);
  read(tree, sec + ".explore_prob", c.explore_prob);
}

/// Learner controller defaults per environment; pendulum follows the tuned table row.
void learner_defaults(const std::string& env, TrainConfig& t) {
  t.controller = ControllerConfig{};
  if (env == "pendulum") {
    t.controller.M = 32;
    t.episodes = 31;
    t.hidden = {32, 32};
  } else if (env == "double-integrator") {
    t.controller.explore_prob = 0.0;
    t.episodes = 30;
    t.hidden = {64, 64};
  } else if (env == "cartpole-swingup") {
    t.controller.beta = 25.0;
    t.episodes = 30;
    t.hidden = {64, 64};
  }
}

}  // namespace

void RunConfig::validate() const {
  try {
    const Environment e = make_env(env);
    train.validate();
    expert.controller.validate();
    if (train.env != env) throw ConfigError("trainer environment does not match env");
    if (train.controller.K > e.spec.T) {
      throw ConfigError("controller K exceeds the episode length T=" + std::to_string(e.spec.T));
    }
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (demo_count < 1) throw ConfigError("demo count must be >= 1");
    if (!(demo_noise >= 0.0)) throw ConfigError("demo noise level must be >= 0");
    if (eval_episodes < 1) throw ConfigError("eval episodes must be >= 1");
    for (double l : eval_noise_levels) {
      if (!(l >= 0.0)) throw ConfigError("noise levels must be >= 0");
    }
    for (double l : transfer_levels) {
      if (!(l >= 0.0)) throw ConfigError("noise levels must be >= 0");
    }
    for (int K : ablation_K) {
      if (K < 1 || K > e.spec.T) throw ConfigError("ablation K values must lie in [1, T]");
    }
    if (ablation_K.size() < 2) throw ConfigError("ablation needs at least two K values");
    if (ablation_smooth < 1) throw ConfigError("ablation smooth_window must be >= 1");
    for (int T : bound_T) {
      if (T < 1) throw ConfigError("bound T values must be >= 1");
    }
    if (bound_T.size() < 2) throw ConfigError("bound check needs at least two T values");
    if (bound_episodes < 1) throw ConfigError("bound episodes must be >= 1");
  } catch (const ConfigError&) {
    throw;
  } catch (const UsageError& e) {
    throw ConfigError(e.what());
  }
}

RunConfig parse_run_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  check_keys(tree);

  RunConfig c;
  read(tree, "env", c.env);
  try {
    c.expert = default_expert_config(c.env);
  } catch (const UsageError&) {
    throw ConfigError("unknown environment '" + c.env + "'");
  }
  learner_defaults(c.env, c.train);
  read(tree, "seed", c.seed);
  read(tree, "workers", c.workers);

  read_controller(tree, "controller", c.train.controller);
  read_bool(tree, "controller.smoothing", c.train.controller.smoothing.enabled);
  read(tree, "controller.smoothing_window", c.train.controller.smoothing.window);
  read(tree, "controller.smoothing_order", c.train.controller.smoothing.order);
  read(tree, "controller.stochastic_samples", c.train.controller.stochastic_samples);

  TrainConfig& t = c.train;
  read(tree, "trainer.lr", t.lr);
  read(tree, "trainer.weight_decay", t.weight_decay);
  read(tree, "trainer.batch_size", t.batch_size);
  read(tree, "trainer.episodes", t.episodes);
  read(tree, "trainer.eval_every", t.eval_every);
  read(tree, "trainer.eval_explore_prob", t.eval_explore_prob);
  read(tree, "trainer.param_ema", t.param_ema);
  read_list(tree, "trainer.hidden", t.hidden);
  try {
    if (auto v = tree.get_optional<std::string>("trainer.grad_weighting")) {
      t.grad_weighting = parse_grad_weighting(*v);
    }
    if (auto v = tree.get_optional<std::string>("trainer.optimizer")) {
      t.optimizer = parse_optimizer(*v);
    }
  } catch (const UsageError& e) {
    throw ConfigError(e.what());
  }

  read_controller(tree, "expert", c.expert.controller);
  read(tree, "expert.sanity_floor", c.expert.sanity_floor);

  read(tree, "demo.count", c.demo_count);
  read(tree, "demo.noise_level", c.demo_noise);

  read(tree, "eval.episodes", c.eval_episodes);
  read_list(tree, "eval.noise_levels", c.eval_noise_levels);
  read_list(tree, "eval.transfer_levels", c.transfer_levels);

  read_list(tree, "ablation.K_values", c.ablation_K);
  read_list(tree, "ablation.seeds", c.ablation_seeds);
  read(tree, "ablation.smooth_window", c.ablation_smooth);

  read_list(tree, "bound.T_values", c.bound_T);
  read(tree, "bound.episodes", c.bound_episodes);

  read(tree, "paths.demos", c.demos_path);
  read(tree, "paths.checkpoint", c.checkpoint_path);
  read(tree, "paths.reports", c.reports_dir);

  t.env = c.env;
  t.seed = c.seed;
  t.env_noise = c.demo_noise;
  t.eval_episodes = c.eval_episodes;
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

void apply_environment_overrides(RunConfig& cfg) {
  if (const char* s = std::getenv("RHIRL_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s, &end, 10);
    if (end == s || *end != '\0') throw ConfigError(std::string("RHIRL_SEED is not a number: ") + s);
    cfg.seed = v;
    cfg.train.seed = v;
  }
}

}  // namespace rhirl
