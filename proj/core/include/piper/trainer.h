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

#ifndef PIPER_TRAINER_H_
#define PIPER_TRAINER_H_

// The training loop. Each iteration collects one or more episodes, grows the
// preference dataset, trains the reward model, updates both SAC levels and
// logs one row. Every source of randomness is a named stream derived from
// the config seed, so a run is a pure function of its config.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "piper/config.h"
#include "piper/environments.h"
#include "piper/hierarchy.h"
#include "piper/preference.h"
#include "piper/rng.h"
#include "piper/sac.h"

namespace piper {

// One row per iteration. Fields that were not measured on a row hold -1
// (eval_success, probe_drift, label_informative_fraction) or 0 (losses).
struct TrainLogRow {
  std::int64_t env_step = 0;
  std::int64_t episode = 0;
  int success = 0;
  double episode_return = 0.0;
  double reward_model_loss = 0.0;
  double high_actor_loss = 0.0;
  double high_critic_loss = 0.0;
  double low_actor_loss = 0.0;
  double low_critic_loss = 0.0;
  double mean_relabeled_reward = 0.0;
  double label_informative_fraction = -1.0;
  double eval_success = -1.0;
  double probe_drift = -1.0;

  friend bool operator==(const TrainLogRow&, const TrainLogRow&) = default;
};

struct TrainLog {
  std::vector<TrainLogRow> rows;
};

struct LabelStats {
  std::int64_t labels = 0;
  std::int64_t informative = 0;  // non-tie
  double fraction() const {
    return labels == 0 ? 0.0 : static_cast<double>(informative) / labels;
  }
};

struct EvalResult {
  double success_rate = 0.0;
  int episodes = 0;
  bool empty = false;  // episodes == 0; the rate is defined as 0
};

std::shared_ptr<const Environment> MakeEnvironment(
    const ExperimentConfig& config);

// Deterministic actions at both levels (or the flat agent when `low` is
// null). Episode resets come from a stream derived from `seed` alone.
EvalResult EvaluateAgents(const SacAgent& high, const SacAgent* low,
                          const Environment& env, const ExperimentConfig& config,
                          int episodes, std::uint64_t seed);

class Trainer {
 public:
  explicit Trainer(const ExperimentConfig& config);

  // Restores a checkpoint. With `config` set, it must match the stored one
  // except for total_steps, output_dir and checkpoint_interval.
  static Trainer FromCheckpoint(const std::string& bytes,
                                const ExperimentConfig* config = nullptr);
  static Trainer LoadCheckpoint(const std::string& path,
                                const ExperimentConfig* config = nullptr);
  std::string SerializeCheckpoint() const;

  // Iterates until env_step >= config.total_steps.
  void Run(const std::function<void(const Trainer&)>& after_iteration = {});
  const TrainLogRow& Iterate();
  bool Done() const { return env_step_ >= config_.total_steps; }

  EvalResult Evaluate(int episodes, std::uint64_t seed) const;

  // The parameters used to relabel high-level replay: phi_target, or phi for
  // the no_target variant.
  const ParamVector& RelabelParams() const;
  // The high-level rewards a SAC update would see for `batch`: learned
  // rewards, or the stored sparse sums for the hier variant.
  Eigen::VectorXd HighRewards(const std::vector<HighTransition>& batch) const;

  const ExperimentConfig& config() const { return config_; }
  const TrainLog& log() const { return log_; }
  const Environment& env() const { return *env_; }
  std::int64_t env_step() const { return env_step_; }
  bool is_flat() const { return config_.variant == Variant::kRflat; }

  // For rflat the flat agent lives in the high slot.
  const SacAgent& high() const { return high_; }
  SacAgent& mutable_high() { return high_; }
  const SacAgent& low() const { return low_; }
  SacAgent& mutable_low() { return low_; }
  const RewardModel& reward_model() const { return reward_; }
  const std::vector<PreferenceTuple>& dataset() const { return dataset_; }
  const LowReplayBuffer& low_buffer() const { return low_buffer_; }
  const HighReplayBuffer& high_buffer() const { return high_buffer_; }
  const LabelStats& label_stats() const { return label_stats_; }
  const std::vector<double>& probe_drifts() const { return probe_drifts_; }
  Rng& replay_rng() { return replay_rng_; }

 private:
  struct Losses {
    double actor = 0.0;
    double critic = 0.0;
  };

  void CollectEpisode(TrainLogRow& row);
  void AddPreferences(TrainLogRow& row);
  void TrainRewardModel(TrainLogRow& row);
  void UpdatePolicies(TrainLogRow& row);
  void MeasureProbe(TrainLogRow& row);
  double LabelAlpha() const;

  ExperimentConfig config_;
  std::shared_ptr<const Environment> env_;

  SacAgent high_;
  SacAgent low_;
  RewardModel reward_;
  LowReplayBuffer low_buffer_;
  HighReplayBuffer high_buffer_;
  std::vector<PreferenceTuple> dataset_;

  Rng env_rng_;
  Rng high_rng_;
  Rng low_rng_;
  Rng pair_rng_;
  Rng hindsight_rng_;
  Rng goal_rng_;
  Rng reward_rng_;
  Rng replay_rng_;
  Rng sac_rng_;
  Rng her_rng_;
  Rng probe_rng_;

  std::int64_t env_step_ = 0;
  std::int64_t episode_ = 0;
  std::uint64_t next_trajectory_id_ = 0;
  std::int64_t next_eval_step_ = 0;
  std::int64_t next_probe_step_ = 0;
  LabelStats label_stats_;

  std::vector<HighTransition> probe_batch_;
  Eigen::VectorXd probe_previous_;
  std::vector<double> probe_drifts_;

  TrainLog log_;
};

}  // namespace piper

#endif  // PIPER_TRAINER_H_
