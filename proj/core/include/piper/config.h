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

#ifndef PIPER_CONFIG_H_
#define PIPER_CONFIG_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace piper {

enum class EnvKind { kMaze, kPush };
enum class Variant { kPiper, kNoV, kNoHr, kNoTarget, kHier, kRflat };
// Goal of the non-hindsight tuple of each preference pair: a fresh draw from
// the task goal distribution, or the first trajectory's episode goal.
enum class OriginalGoal { kSampled, kEpisode };

std::string EnvKindName(EnvKind env);
std::string VariantName(Variant variant);
// Throws ConfigError for unknown names.
Variant ParseVariant(const std::string& name);
std::vector<Variant> AllVariants();

struct ExperimentConfig {
  EnvKind env = EnvKind::kMaze;
  std::uint64_t seed = 0;
  std::int64_t total_steps = 150000;
  int k = 10;
  int horizon = 60;
  double alpha = 1e-5;
  double beta = 1.0;
  double tau = 0.8;
  double epsilon = 0.5;
  double gamma = 0.95;

  // SAC, both levels.
  double sac_alpha = 0.05;
  double tau_critic = 0.8;
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  int batch_size = 256;
  int net_width = 64;
  int net_depth = 3;

  // Reward model.
  int reward_width = 64;
  int reward_depth = 2;
  double reward_lr = 1e-3;
  int reward_batch_size = 50;
  int reward_updates = 10;
  int pairs_per_iteration = 10;
  int hindsight_goals = 4;
  OriginalGoal original_goal = OriginalGoal::kSampled;
  double tie_tol = 1e-6;

  std::int64_t low_buffer_capacity = 200000;
  std::int64_t high_buffer_capacity = 200000;
  int n_batches = 10;
  int episodes_per_iteration = 1;
  std::int64_t update_after = 1000;
  bool relabel_lower_her = true;
  int her_k = 4;
  double random_eps = 0.0;
  double noise_eps = 0.0;

  Variant variant = Variant::kPiper;

  // Environment geometry. The maze layout is fixed by maze_seed, independent
  // of the training seed.
  int maze_width = 6;
  int maze_height = 6;
  std::uint64_t maze_seed = 1;
  bool include_layout = true;

  int eval_episodes = 20;
  std::int64_t eval_interval = 2000;
  std::int64_t probe_interval = 1000;
  int probe_size = 256;
  std::int64_t checkpoint_interval = 0;  // 0: only at the end of a run

  std::string output_dir = "runs/piper";

  void Validate() const;

  friend bool operator==(const ExperimentConfig&,
                         const ExperimentConfig&) = default;
};

// Parses `key = value` lines; '#' starts a comment. Omitted keys keep their
// defaults. Errors name the key and its line.
ExperimentConfig ParseConfig(std::istream& in);
ExperimentConfig ParseConfigString(const std::string& text);
ExperimentConfig LoadConfig(const std::string& path);

// Every key, in a fixed order, at full precision; ParseConfig inverts it.
void WriteConfig(std::ostream& out, const ExperimentConfig& config);
std::string ConfigToString(const ExperimentConfig& config);

// Applies one `key = value` override, as from the command line.
void SetConfigValue(ExperimentConfig& config, const std::string& key,
                    const std::string& value);

}  // namespace piper

#endif  // PIPER_CONFIG_H_
