// Copyright 2026 The Piper Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "piper/config.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "piper/errors.h"

namespace piper {
namespace {

struct Field {
  std::string name;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

std::string Trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

[[noreturn]] void BadValue(const std::string& key, const std::string& value,
                           const char* expected) {
  throw ConfigError("invalid value '" + value + "' for key '" + key +
                    "' (expected " + expected + ")");
}

template <typename T>
T ParseInteger(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = first + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) BadValue(key, value, "an integer");
  return out;
}

double ParseReal(const std::string& key, const std::string& value) {
  // strtod accepts the exponent forms WriteConfig emits.
  char* end = nullptr;
  const double out = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size() ||
      !std::isfinite(out)) {
    BadValue(key, value, "a finite real number");
  }
  return out;
}

bool ParseBool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  BadValue(key, value, "true or false");
}

// Shortest text that parses back to the same double.
std::string FormatReal(double value) {
  char buffer[32];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

template <typename T>
Field IntegerField(const char* name, T ExperimentConfig::*member) {
  return {name,
          [name, member](ExperimentConfig& c, const std::string& v) {
            c.*member = ParseInteger<T>(name, v);
          },
          [member](const ExperimentConfig& c) {
            return std::to_string(c.*member);
          }};
}

Field RealField(const char* name, double ExperimentConfig::*member) {
  return {name,
          [name, member](ExperimentConfig& c, const std::string& v) {
            c.*member = ParseReal(name, v);
          },
          [member](const ExperimentConfig& c) { return FormatReal(c.*member); }};
}

Field BoolField(const char* name, bool ExperimentConfig::*member) {
  return {name,
          [name, member](ExperimentConfig& c, const std::string& v) {
            c.*member = ParseBool(name, v);
          },
          [member](const ExperimentConfig& c) {
            return std::string(c.*member ? "true" : "false");
          }};
}

const std::vector<Field>& Fields() {
  static const std::vector<Field> fields = {
      {"env",
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "maze") {
           c.env = EnvKind::kMaze;
         } else if (v == "push") {
           c.env = EnvKind::kPush;
         } else {
           BadValue("env", v, "maze or push");
         }
       },
       [](const ExperimentConfig& c) { return EnvKindName(c.env); }},
      {"variant",
       [](ExperimentConfig& c, const std::string& v) {
         c.variant = ParseVariant(v);
       },
       [](const ExperimentConfig& c) { return VariantName(c.variant); }},
      IntegerField("seed", &ExperimentConfig::seed),
      IntegerField("total_steps", &ExperimentConfig::total_steps),
      IntegerField("k", &ExperimentConfig::k),
      IntegerField("horizon", &ExperimentConfig::horizon),
      RealField("alpha", &ExperimentConfig::alpha),
      RealField("beta", &ExperimentConfig::beta),
      RealField("tau", &ExperimentConfig::tau),
      RealField("epsilon", &ExperimentConfig::epsilon),
      RealField("gamma", &ExperimentConfig::gamma),
      RealField("sac_alpha", &ExperimentConfig::sac_alpha),
      RealField("tau_critic", &ExperimentConfig::tau_critic),
      RealField("actor_lr", &ExperimentConfig::actor_lr),
      RealField("critic_lr", &ExperimentConfig::critic_lr),
      IntegerField("batch_size", &ExperimentConfig::batch_size),
      IntegerField("net_width", &ExperimentConfig::net_width),
      IntegerField("net_depth", &ExperimentConfig::net_depth),
      IntegerField("reward_width", &ExperimentConfig::reward_width),
      IntegerField("reward_depth", &ExperimentConfig::reward_depth),
      RealField("reward_lr", &ExperimentConfig::reward_lr),
      IntegerField("reward_batch_size", &ExperimentConfig::reward_batch_size),
      IntegerField("reward_updates", &ExperimentConfig::reward_updates),
      IntegerField("pairs_per_iteration",
                   &ExperimentConfig::pairs_per_iteration),
      IntegerField("hindsight_goals", &ExperimentConfig::hindsight_goals),
      {"original_goal",
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "sampled") {
           c.original_goal = OriginalGoal::kSampled;
         } else if (v == "episode") {
           c.original_goal = OriginalGoal::kEpisode;
         } else {
           BadValue("original_goal", v, "sampled or episode");
         }
       },
       [](const ExperimentConfig& c) {
         return std::string(c.original_goal == OriginalGoal::kSampled
                                ? "sampled"
                                : "episode");
       }},
      RealField("tie_tol", &ExperimentConfig::tie_tol),
      IntegerField("low_buffer_capacity",
                   &ExperimentConfig::low_buffer_capacity),
      IntegerField("high_buffer_capacity",
                   &ExperimentConfig::high_buffer_capacity),
      IntegerField("n_batches", &ExperimentConfig::n_batches),
      IntegerField("episodes_per_iteration",
                   &ExperimentConfig::episodes_per_iteration),
      IntegerField("update_after", &ExperimentConfig::update_after),
      BoolField("relabel_lower_her", &ExperimentConfig::relabel_lower_her),
      IntegerField("her_k", &ExperimentConfig::her_k),
      RealField("random_eps", &ExperimentConfig::random_eps),
      RealField("noise_eps", &ExperimentConfig::noise_eps),
      IntegerField("maze_width", &ExperimentConfig::maze_width),
      IntegerField("maze_height", &ExperimentConfig::maze_height),
      IntegerField("maze_seed", &ExperimentConfig::maze_seed),
      BoolField("include_layout", &ExperimentConfig::include_layout),
      IntegerField("eval_episodes", &ExperimentConfig::eval_episodes),
      IntegerField("eval_interval", &ExperimentConfig::eval_interval),
      IntegerField("probe_interval", &ExperimentConfig::probe_interval),
      IntegerField("probe_size", &ExperimentConfig::probe_size),
      IntegerField("checkpoint_interval",
                   &ExperimentConfig::checkpoint_interval),
      {"output_dir",
       [](ExperimentConfig& c, const std::string& v) {
         if (v.empty()) BadValue("output_dir", v, "a path");
         c.output_dir = v;
       },
       [](const ExperimentConfig& c) { return c.output_dir; }},
  };
  return fields;
}

const Field* FindField(const std::string& key) {
  for (const Field& field : Fields()) {
    if (field.name == key) return &field;
  }
  return nullptr;
}

using LineMap = std::map<std::string, int>;

std::string Where(const LineMap& lines, const std::string& key) {
  const auto it = lines.find(key);
  if (it == lines.end()) return key + " (default)";
  return key + " (line " + std::to_string(it->second) + ")";
}

void Require(bool ok, const LineMap& lines, const std::string& key,
             const std::string& message) {
  if (!ok) throw ConfigError(Where(lines, key) + ": " + message);
}

void ValidateWithLines(const ExperimentConfig& c, const LineMap& lines) {
  if (c.k > c.horizon) {
    throw ConfigError(Where(lines, "k") + " = " + std::to_string(c.k) +
                      " exceeds " + Where(lines, "horizon") + " = " +
                      std::to_string(c.horizon));
  }
  Require(c.k >= 1, lines, "k", "must be at least 1");
  Require(c.horizon >= 1, lines, "horizon", "must be at least 1");
  Require(c.total_steps >= 0, lines, "total_steps", "must be non-negative");
  Require(c.alpha >= 0.0, lines, "alpha", "must be non-negative");
  Require(c.beta > 0.0, lines, "beta", "must be positive");
  Require(c.tau > 0.0 && c.tau <= 1.0, lines, "tau", "must lie in (0, 1]");
  Require(c.epsilon > 0.0, lines, "epsilon", "must be positive");
  Require(c.gamma > 0.0 && c.gamma < 1.0, lines, "gamma",
          "must lie in (0, 1)");
  Require(c.sac_alpha >= 0.0, lines, "sac_alpha", "must be non-negative");
  Require(c.tau_critic >= 0.0 && c.tau_critic <= 1.0, lines, "tau_critic",
          "must lie in [0, 1]");
  Require(c.actor_lr > 0.0, lines, "actor_lr", "must be positive");
  Require(c.critic_lr > 0.0, lines, "critic_lr", "must be positive");
  Require(c.reward_lr > 0.0, lines, "reward_lr", "must be positive");
  Require(c.batch_size >= 1, lines, "batch_size", "must be at least 1");
  Require(c.net_width >= 1, lines, "net_width", "must be at least 1");
  Require(c.net_depth >= 0, lines, "net_depth", "must be non-negative");
  Require(c.reward_width >= 1, lines, "reward_width", "must be at least 1");
  Require(c.reward_depth >= 0, lines, "reward_depth", "must be non-negative");
  Require(c.reward_batch_size >= 1, lines, "reward_batch_size",
          "must be at least 1");
  Require(c.reward_updates >= 0, lines, "reward_updates",
          "must be non-negative");
  Require(c.pairs_per_iteration >= 0, lines, "pairs_per_iteration",
          "must be non-negative");
  Require(c.hindsight_goals >= 0, lines, "hindsight_goals",
          "must be non-negative");
  Require(c.tie_tol >= 0.0, lines, "tie_tol", "must be non-negative");
  Require(c.low_buffer_capacity >= 1, lines, "low_buffer_capacity",
          "must be at least 1");
  Require(c.high_buffer_capacity >= 1, lines, "high_buffer_capacity",
          "must be at least 1");
  Require(c.n_batches >= 0, lines, "n_batches", "must be non-negative");
  Require(c.episodes_per_iteration >= 1, lines, "episodes_per_iteration",
          "must be at least 1");
  Require(c.update_after >= 0, lines, "update_after", "must be non-negative");
  Require(c.her_k >= 0, lines, "her_k", "must be non-negative");
  Require(c.random_eps >= 0.0 && c.random_eps <= 1.0, lines, "random_eps",
          "must lie in [0, 1]");
  Require(c.noise_eps >= 0.0, lines, "noise_eps", "must be non-negative");
  Require(c.maze_width >= 5, lines, "maze_width", "must be at least 5");
  Require(c.maze_height >= 5, lines, "maze_height", "must be at least 5");
  Require(c.eval_episodes >= 0, lines, "eval_episodes",
          "must be non-negative");
  Require(c.eval_interval >= 1, lines, "eval_interval", "must be at least 1");
  Require(c.probe_interval >= 1, lines, "probe_interval",
          "must be at least 1");
  Require(c.probe_size >= 1, lines, "probe_size", "must be at least 1");
  Require(c.checkpoint_interval >= 0, lines, "checkpoint_interval",
          "must be non-negative");
}

}  // namespace

std::string EnvKindName(EnvKind env) {
  return env == EnvKind::kMaze ? "maze" : "push";
}

std::string VariantName(Variant variant) {
  switch (variant) {
    case Variant::kPiper:
      return "piper";
    case Variant::kNoV:
      return "no_v";
    case Variant::kNoHr:
      return "no_hr";
    case Variant::kNoTarget:
      return "no_target";
    case Variant::kHier:
      return "hier";
    case Variant::kRflat:
      return "rflat";
  }
  return "unknown";
}

std::vector<Variant> AllVariants() {
  return {Variant::kPiper, Variant::kNoV,  Variant::kNoHr,
          Variant::kNoTarget, Variant::kHier, Variant::kRflat};
}

Variant ParseVariant(const std::string& name) {
  for (Variant v : AllVariants()) {
    if (VariantName(v) == name) return v;
  }
  throw ConfigError("unknown variant '" + name +
                    "' (expected piper, no_v, no_hr, no_target, hier or "
                    "rflat)");
}

void ExperimentConfig::Validate() const { ValidateWithLines(*this, {}); }

ExperimentConfig ParseConfig(std::istream& in) {
  ExperimentConfig config;
  LineMap lines;
  std::string raw;
  int line_number = 0;
  while (std::getline(in, raw)) {
    ++line_number;
    const std::string line = Trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_number) +
                        ": expected 'key = value'");
    }
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    const Field* field = FindField(key);
    if (field == nullptr) {
      throw ConfigError("line " + std::to_string(line_number) +
                        ": unknown key '" + key + "'");
    }
    if (lines.count(key) != 0) {
      throw ConfigError("line " + std::to_string(line_number) +
                        ": duplicate key '" + key + "' (first at line " +
                        std::to_string(lines[key]) + ")");
    }
    try {
      field->set(config, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_number) + ": " +
                        e.what());
    }
    lines[key] = line_number;
  }
  if (in.bad()) throw IoError("failed reading config");
  ValidateWithLines(config, lines);
  return config;
}

ExperimentConfig ParseConfigString(const std::string& text) {
  std::istringstream in(text);
  return ParseConfig(in);
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return ParseConfig(in);
}

void WriteConfig(std::ostream& out, const ExperimentConfig& config) {
  for (const Field& field : Fields()) {
    out << field.name << " = " << field.get(config) << '\n';
  }
}

std::string ConfigToString(const ExperimentConfig& config) {
  std::ostringstream out;
  WriteConfig(out, config);
  return out.str();
}

void SetConfigValue(ExperimentConfig& config, const std::string& key,
                    const std::string& value) {
  const Field* field = FindField(key);
  if (field == nullptr) throw ConfigError("unknown key '" + key + "'");
  field->set(config, Trim(value));
}

}  // namespace piper
