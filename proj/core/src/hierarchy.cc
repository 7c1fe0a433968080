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

#include "piper/hierarchy.h"

#include <algorithm>
#include <utility>

#include "piper/errors.h"

namespace piper {

using Eigen::VectorXd;

HighTrajectory HighTrajectory::Truncated(int n) const {
  PIPER_CHECK(n >= 0 && n <= size(), "truncation beyond trajectory length");
  HighTrajectory out;
  out.id = id;
  out.g_star = g_star;
  out.states.assign(states.begin(), states.begin() + n);
  out.subgoals.assign(subgoals.begin(), subgoals.begin() + n);
  out.achieved_tail.assign(achieved_tail.begin(), achieved_tail.begin() + n);
  return out;
}

VectorXd SubgoalProjection(const VectorXd& raw, const Box& goal_space) {
  PIPER_CHECK(raw.size() == goal_space.dim(), "subgoal dimension mismatch");
  const VectorXd clipped = raw.cwiseMax(-1.0).cwiseMin(1.0);
  return goal_space.center().array() +
         goal_space.half_extent().array() * clipped.array();
}

VectorXd SubgoalToRaw(const VectorXd& subgoal, const Box& goal_space) {
  PIPER_CHECK(subgoal.size() == goal_space.dim(), "subgoal dimension mismatch");
  return (subgoal - goal_space.center()).array() /
         goal_space.half_extent().array();
}

// ----------------------------------------------------------- LowReplayBuffer

LowReplayBuffer::LowReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay capacity must be positive");
}

void LowReplayBuffer::Add(LowTransition transition) {
  if (records_.size() < capacity_) {
    records_.push_back(std::move(transition));
  } else {
    records_[next_] = std::move(transition);
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<LowTransition> LowReplayBuffer::Sample(int m, Rng& rng) const {
  std::vector<LowTransition> out;
  if (m <= 0) return out;
  if (records_.empty()) throw UsageError("sample_batch: empty low buffer");
  out.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    out.push_back(records_[rng.UniformInt(records_.size())]);
  }
  return out;
}

void LowReplayBuffer::Restore(std::vector<LowTransition> records,
                              std::size_t next_slot) {
  PIPER_CHECK(records.size() <= capacity_, "restored buffer exceeds capacity");
  records_ = std::move(records);
  next_ = next_slot % capacity_;
}

// ---------------------------------------------------------- HighReplayBuffer

HighReplayBuffer::HighReplayBuffer(std::size_t capacity)
    : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay capacity must be positive");
}

void HighReplayBuffer::AddEpisode(
    std::shared_ptr<const HighTrajectory> trajectory,
    std::vector<HighTransition> transitions) {
  if (transitions.empty()) return;
  while (!episodes_.empty() && size_ + transitions.size() > capacity_) {
    size_ -= episodes_.front().transitions.size();
    episodes_.pop_front();
  }
  size_ += transitions.size();
  episodes_.push_back({std::move(trajectory), std::move(transitions)});
  RebuildIndex();
}

void HighReplayBuffer::RebuildIndex() {
  cumulative_.resize(episodes_.size());
  std::size_t total = 0;
  for (std::size_t i = 0; i < episodes_.size(); ++i) {
    total += episodes_[i].transitions.size();
    cumulative_[i] = total;
  }
}

std::vector<HighReplayBuffer::Sampled> HighReplayBuffer::Sample(
    int m, Rng& rng) const {
  std::vector<Sampled> out;
  if (m <= 0) return out;
  if (size_ == 0) throw UsageError("sample_batch: empty high buffer");
  out.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const std::size_t index = rng.UniformInt(size_);
    const auto it =
        std::upper_bound(cumulative_.begin(), cumulative_.end(), index);
    const std::size_t episode = static_cast<std::size_t>(it - cumulative_.begin());
    const std::size_t base = episode == 0 ? 0 : cumulative_[episode - 1];
    const Episode& e = episodes_[episode];
    out.push_back({e.transitions[index - base], e.trajectory});
  }
  return out;
}

std::shared_ptr<const HighTrajectory> HighReplayBuffer::SampleTrajectory(
    Rng& rng) const {
  if (episodes_.empty()) throw UsageError("sample: empty high buffer");
  return episodes_[rng.UniformInt(episodes_.size())].trajectory;
}

// ------------------------------------------------------------------ Rollout

namespace {

VectorXd Explore(const SacAgent& agent, VectorXd action,
                 const RolloutConfig& config, Rng& rng) {
  if (config.mode != ActionMode::kStochastic) return action;
  const VectorXd& low = agent.hyper.action_low;
  const VectorXd& high = agent.hyper.action_high;
  if (config.random_eps > 0.0 && rng.Uniform() < config.random_eps) {
    for (Eigen::Index i = 0; i < action.size(); ++i) {
      action[i] = rng.Uniform(low[i], high[i]);
    }
    return action;
  }
  if (config.noise_eps > 0.0) {
    const VectorXd half = agent.action_half_range();
    for (Eigen::Index i = 0; i < action.size(); ++i) {
      action[i] = std::clamp(action[i] + config.noise_eps * half[i] * rng.Normal(),
                             low[i], high[i]);
    }
  }
  return action;
}

void CheckRolloutConfig(const RolloutConfig& config) {
  if (config.k < 1) throw ConfigError("k must be >= 1");
  if (config.horizon < config.k) throw ConfigError("horizon must be >= k");
}

}  // namespace

EpisodeRecord RolloutEpisode(const SacAgent& high, const SacAgent& low,
                             const Environment& env,
                             const RolloutConfig& config,
                             const RolloutStreams& streams,
                             std::uint64_t trajectory_id) {
  CheckRolloutConfig(config);
  const double epsilon = env.spec().epsilon;
  const Box& goal_space = env.spec().goal_space;

  EpisodeRecord record;
  record.trajectory = std::make_shared<HighTrajectory>();
  HighTrajectory& trajectory = *record.trajectory;
  trajectory.id = trajectory_id;

  VectorXd g_star;
  EnvObservation obs = env.Reset(*streams.env, &g_star);
  trajectory.g_star = g_star;

  int t = 0;
  int segment = 0;
  while (t < config.horizon && !record.success) {
    const VectorXd s = env.StateVector(obs);
    VectorXd raw = SelectAction(high, s, g_star, config.mode, streams.high);
    raw = Explore(high, std::move(raw), config, *streams.high);
    const VectorXd subgoal = SubgoalProjection(raw, goal_space);
    trajectory.states.push_back(s);
    trajectory.subgoals.push_back(subgoal);

    double reward_sum = 0.0;
    int steps = 0;
    VectorXd current = s;
    while (steps < config.k && t < config.horizon) {
      VectorXd action =
          SelectAction(low, current, subgoal, config.mode, streams.low);
      action = Explore(low, std::move(action), config, *streams.low);
      const EnvObservation next = env.Step(obs, action);
      const VectorXd next_state = env.StateVector(next);
      const double lower_reward =
          SparseGoalReward(next.achieved_goal, subgoal, epsilon);
      record.low.push_back({current, subgoal, action, lower_reward,
                            next_state, lower_reward == 0.0});
      const double env_reward =
          SparseGoalReward(next.achieved_goal, g_star, epsilon);
      reward_sum += env_reward;
      record.episode_return += env_reward;
      obs = next;
      current = next_state;
      ++t;
      ++steps;
      if (env_reward == 0.0) {
        record.success = true;
        break;
      }
    }
    trajectory.achieved_tail.push_back(obs.achieved_goal);
    record.high.push_back({s, g_star, subgoal, reward_sum, current,
                           record.success, trajectory_id, segment, steps});
    ++segment;
  }
  record.steps = t;
  return record;
}

EpisodeRecord RolloutFlatEpisode(const SacAgent& agent, const Environment& env,
                                 const RolloutConfig& config,
                                 const RolloutStreams& streams,
                                 std::uint64_t trajectory_id) {
  if (config.horizon < 1) throw ConfigError("horizon must be positive");
  const double epsilon = env.spec().epsilon;

  EpisodeRecord record;
  record.trajectory = std::make_shared<HighTrajectory>();
  HighTrajectory& trajectory = *record.trajectory;
  trajectory.id = trajectory_id;

  VectorXd g_star;
  EnvObservation obs = env.Reset(*streams.env, &g_star);
  trajectory.g_star = g_star;

  int t = 0;
  while (t < config.horizon && !record.success) {
    const VectorXd s = env.StateVector(obs);
    VectorXd action = SelectAction(agent, s, g_star, config.mode, streams.low);
    action = Explore(agent, std::move(action), config, *streams.low);
    const EnvObservation next = env.Step(obs, action);
    const double reward = SparseGoalReward(next.achieved_goal, g_star, epsilon);
    record.episode_return += reward;
    record.success = reward == 0.0;
    trajectory.states.push_back(s);
    trajectory.subgoals.push_back(action);
    trajectory.achieved_tail.push_back(next.achieved_goal);
    record.high.push_back({s, g_star, action, reward, env.StateVector(next),
                           record.success, trajectory_id, t, 1});
    obs = next;
    ++t;
  }
  record.steps = t;
  return record;
}

std::vector<LowTransition> HindsightLowTransitions(
    const std::vector<LowTransition>& segment, const Environment& env,
    int per_transition, Rng& rng) {
  std::vector<LowTransition> out;
  if (per_transition <= 0) return out;
  const double epsilon = env.spec().epsilon;
  out.reserve(segment.size() * static_cast<std::size_t>(per_transition));
  for (std::size_t i = 0; i < segment.size(); ++i) {
    const VectorXd achieved = env.AchievedGoal(segment[i].s_next);
    for (int r = 0; r < per_transition; ++r) {
      const std::size_t future =
          i + rng.UniformInt(segment.size() - i);
      LowTransition relabeled = segment[i];
      relabeled.g = env.AchievedGoal(segment[future].s_next);
      relabeled.r = SparseGoalReward(achieved, relabeled.g, epsilon);
      relabeled.done = relabeled.r == 0.0;
      out.push_back(std::move(relabeled));
    }
  }
  return out;
}

SacBatch MakeLowBatch(const std::vector<LowTransition>& transitions,
                      const SacDims& dims) {
  SacBatch batch =
      SacBatch::Allocate(dims, static_cast<Eigen::Index>(transitions.size()));
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    const LowTransition& tr = transitions[i];
    batch.states.col(c) = tr.s;
    batch.goals.col(c) = tr.g;
    batch.actions.col(c) = tr.a;
    batch.rewards[c] = tr.r;
    batch.next_states.col(c) = tr.s_next;
    batch.dones[c] = tr.done ? 1.0 : 0.0;
  }
  return batch;
}

SacBatch MakeHighBatch(const std::vector<HighTransition>& transitions,
                       const VectorXd& rewards, const SacDims& dims,
                       const Box& goal_space, bool raw_actions) {
  PIPER_CHECK(rewards.size() == static_cast<Eigen::Index>(transitions.size()),
              "reward count does not match batch");
  SacBatch batch =
      SacBatch::Allocate(dims, static_cast<Eigen::Index>(transitions.size()));
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    const HighTransition& tr = transitions[i];
    batch.states.col(c) = tr.s;
    batch.goals.col(c) = tr.g_star;
    batch.actions.col(c) =
        raw_actions ? tr.g_t : SubgoalToRaw(tr.g_t, goal_space);
    batch.rewards[c] = rewards[c];
    batch.next_states.col(c) = tr.s_next;
    batch.dones[c] = tr.done ? 1.0 : 0.0;
  }
  return batch;
}

}  // namespace piper
