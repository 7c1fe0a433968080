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

#ifndef PIPER_HIERARCHY_H_
#define PIPER_HIERARCHY_H_

// Two-level controller: the higher policy emits a subgoal every k steps and
// the lower policy acts toward it. Also the replay buffers for both levels.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "piper/environments.h"
#include "piper/rng.h"
#include "piper/sac.h"

namespace piper {

// (s_t, g_t, a_t, r^L_t, s_{t+1}) with r^L from SparseGoalReward against the
// subgoal at the next state's achieved goal.
struct LowTransition {
  Eigen::VectorXd s;
  Eigen::VectorXd g;
  Eigen::VectorXd a;
  double r = 0.0;
  Eigen::VectorXd s_next;
  bool done = false;
};

// (s_t, g*, g_t, sum of sparse rewards over the segment, s_{t+k}). The stored
// reward sum is a placeholder; learning uses relabeled rewards.
struct HighTransition {
  Eigen::VectorXd s;
  Eigen::VectorXd g_star;
  Eigen::VectorXd g_t;
  double r_sum = 0.0;
  Eigen::VectorXd s_next;
  bool done = false;
  std::uint64_t trajectory_id = 0;
  int segment = 0;
  // Lower steps in this segment (k, or fewer for the last segment).
  int steps = 0;
};

// Sequence of (state, subgoal) pairs spaced k steps apart.
struct HighTrajectory {
  std::uint64_t id = 0;
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> subgoals;
  // Achieved goal at the state reached at the end of each segment.
  std::vector<Eigen::VectorXd> achieved_tail;
  Eigen::VectorXd g_star;

  int size() const { return static_cast<int>(states.size()); }
  // First n entries.
  HighTrajectory Truncated(int n) const;
};

// Affine map of [-1, 1]^d onto the goal box. Entries are clipped first.
Eigen::VectorXd SubgoalProjection(const Eigen::VectorXd& raw,
                                  const Box& goal_space);
// Inverse of SubgoalProjection.
Eigen::VectorXd SubgoalToRaw(const Eigen::VectorXd& subgoal,
                             const Box& goal_space);

class LowReplayBuffer {
 public:
  explicit LowReplayBuffer(std::size_t capacity);

  void Add(LowTransition transition);
  std::size_t size() const { return records_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return records_.empty(); }
  // Uniform with replacement. Throws UsageError when empty and m > 0.
  std::vector<LowTransition> Sample(int m, Rng& rng) const;

  // Ring storage in slot order, and the next slot to overwrite.
  const std::vector<LowTransition>& records() const { return records_; }
  std::size_t next_slot() const { return next_; }
  void Restore(std::vector<LowTransition> records, std::size_t next_slot);

 private:
  std::size_t capacity_;
  std::vector<LowTransition> records_;
  std::size_t next_ = 0;
};

// Stores whole episodes; eviction drops the oldest episode first so a
// trajectory is never partially evicted.
class HighReplayBuffer {
 public:
  struct Episode {
    std::shared_ptr<const HighTrajectory> trajectory;
    std::vector<HighTransition> transitions;
  };
  struct Sampled {
    HighTransition transition;
    std::shared_ptr<const HighTrajectory> trajectory;
  };

  explicit HighReplayBuffer(std::size_t capacity);

  void AddEpisode(std::shared_ptr<const HighTrajectory> trajectory,
                  std::vector<HighTransition> transitions);
  // Number of stored transitions.
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t num_episodes() const { return episodes_.size(); }
  bool empty() const { return size_ == 0; }

  // Uniform over transitions, with replacement.
  std::vector<Sampled> Sample(int m, Rng& rng) const;
  // Uniform over stored episodes.
  std::shared_ptr<const HighTrajectory> SampleTrajectory(Rng& rng) const;

  const std::deque<Episode>& episodes() const { return episodes_; }

 private:
  void RebuildIndex();

  std::size_t capacity_;
  std::size_t size_ = 0;
  std::deque<Episode> episodes_;
  // cumulative_[i] = transitions in episodes_[0..i].
  std::vector<std::size_t> cumulative_;
};

struct RolloutConfig {
  int k = 10;
  int horizon = 60;
  ActionMode mode = ActionMode::kStochastic;
  // Probability of a uniformly random action, and Gaussian action noise in
  // units of the action half-range. Stochastic mode only.
  double random_eps = 0.0;
  double noise_eps = 0.0;
};

struct RolloutStreams {
  Rng* env;
  Rng* high;
  Rng* low;
};

struct EpisodeRecord {
  std::shared_ptr<HighTrajectory> trajectory;
  std::vector<LowTransition> low;
  std::vector<HighTransition> high;
  bool success = false;
  int steps = 0;
  // Sum of sparse rewards against the final goal over all steps.
  double episode_return = 0.0;
};

// Runs one episode. The episode ends after `horizon` steps or as soon as the
// achieved goal is within epsilon of the final goal.
EpisodeRecord RolloutEpisode(const SacAgent& high, const SacAgent& low,
                             const Environment& env,
                             const RolloutConfig& config,
                             const RolloutStreams& streams,
                             std::uint64_t trajectory_id);

// Flat variant: a single agent conditioned on the final goal acts at every
// step. The resulting trajectory has one entry per step with the action in
// the subgoal slot; high transitions hold one step each.
EpisodeRecord RolloutFlatEpisode(const SacAgent& agent, const Environment& env,
                                 const RolloutConfig& config,
                                 const RolloutStreams& streams,
                                 std::uint64_t trajectory_id);

// Hindsight copies of a segment's lower transitions: each transition is
// relabeled `per_transition` times with the achieved goal of a uniformly
// chosen same-or-later transition in the segment.
std::vector<LowTransition> HindsightLowTransitions(
    const std::vector<LowTransition>& segment, const Environment& env,
    int per_transition, Rng& rng);

SacBatch MakeLowBatch(const std::vector<LowTransition>& transitions,
                      const SacDims& dims);
// Actions are the raw [-1, 1] subgoal coordinates; pass raw_actions = true
// when g_t already holds raw actions (flat variant).
SacBatch MakeHighBatch(const std::vector<HighTransition>& transitions,
                       const Eigen::VectorXd& rewards, const SacDims& dims,
                       const Box& goal_space, bool raw_actions = false);

}  // namespace piper

#endif  // PIPER_HIERARCHY_H_
