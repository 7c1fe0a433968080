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

#include <cmath>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "gtest/gtest.h"
#include "piper/environments.h"
#include "piper/errors.h"
#include "piper/rng.h"
#include "piper/sac.h"

namespace piper {
namespace {

using Eigen::VectorXd;

// One-dimensional corridor whose goal sits one step from the start, so any
// positive action succeeds immediately.
class OneStepEnv : public Environment {
 public:
  OneStepEnv() {
    spec_.epsilon = 0.1;
    spec_.step_scale = 1.0;
    spec_.horizon = 60;
    spec_.goal_space.low = VectorXd::Constant(1, 0.0);
    spec_.goal_space.high = VectorXd::Constant(1, 2.0);
  }
  std::string name() const override { return "one-step"; }
  const EnvSpec& spec() const override { return spec_; }
  int action_dim() const override { return 1; }
  EnvObservation Reset(Rng&, VectorXd* goal) const override {
    *goal = VectorXd::Constant(1, 1.0);
    EnvObservation obs;
    obs.agent_position = VectorXd::Zero(1);
    obs.achieved_goal = obs.agent_position;
    return obs;
  }
  EnvObservation Step(const EnvObservation& obs,
                      const VectorXd& action) const override {
    EnvObservation next = obs;
    next.agent_position[0] += action[0] > 0.0 ? 1.0 : -1.0;
    next.achieved_goal = next.agent_position;
    return next;
  }

 protected:
  int position_dim() const override { return 1; }
  int layout_dim() const override { return 0; }
  VectorXd AchievedFromPosition(const VectorXd& p) const override { return p; }
  VectorXd Layout() const override { return {}; }

 private:
  EnvSpec spec_;
};

SacAgent MakeAgent(int state_dim, int goal_dim, int action_dim,
                   std::uint64_t seed) {
  SacHyper hyper;
  hyper.action_low = VectorXd::Constant(action_dim, -1.0);
  hyper.action_high = VectorXd::Constant(action_dim, 1.0);
  SacArchitecture arch;
  arch.width = 16;
  arch.hidden_layers = 2;
  Rng rng(seed);
  return SacAgent::Create({state_dim, goal_dim, action_dim}, hyper, arch, rng);
}

struct MazeFixture {
  MazeFixture()
      : maze(MakeMaze(1, 6, 6)),
        env(maze, MazeEnv::DefaultSpec(maze), true),
        high(MakeAgent(env.state_dim(), 2, 2, 1)),
        low(MakeAgent(env.state_dim(), 2, 2, 2)) {}

  EpisodeRecord Run(const RolloutConfig& config, std::uint64_t seed,
                    std::uint64_t id = 0) const {
    Rng env_rng(seed), high_rng(seed + 1), low_rng(seed + 2);
    return RolloutEpisode(high, low, env, config,
                          {&env_rng, &high_rng, &low_rng}, id);
  }

  MazeSpec maze;
  MazeEnv env;
  SacAgent high;
  SacAgent low;
};

LowTransition Record(double value) {
  LowTransition t;
  t.s = VectorXd::Constant(1, value);
  t.g = VectorXd::Zero(1);
  t.a = VectorXd::Zero(1);
  t.s_next = t.s;
  return t;
}

std::vector<HighTransition> HighRecords(std::uint64_t id, int count) {
  std::vector<HighTransition> out(count);
  for (int i = 0; i < count; ++i) {
    out[i].trajectory_id = id;
    out[i].segment = i;
    out[i].s = VectorXd::Zero(1);
  }
  return out;
}

TEST(SubgoalProjectionTest, MapsCubeOntoBox) {
  Box box;
  box.low = VectorXd::Constant(1, 0.0);
  box.high = VectorXd::Constant(1, 10.0);
  EXPECT_DOUBLE_EQ(SubgoalProjection(VectorXd::Constant(1, -1.0), box)[0], 0.0);
  EXPECT_DOUBLE_EQ(SubgoalProjection(VectorXd::Constant(1, 0.0), box)[0], 5.0);
  EXPECT_DOUBLE_EQ(SubgoalProjection(VectorXd::Constant(1, 0.5), box)[0], 7.5);
  EXPECT_DOUBLE_EQ(SubgoalProjection(VectorXd::Constant(1, 3.0), box)[0], 10.0);
  EXPECT_DOUBLE_EQ(SubgoalToRaw(VectorXd::Constant(1, 7.5), box)[0], 0.5);
}

TEST(SubgoalProjectionTest, AlwaysInsideBox) {
  Box box;
  box.low = Eigen::Vector2d(1.0, -2.0);
  box.high = Eigen::Vector2d(5.0, 3.0);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const VectorXd raw = Eigen::Vector2d(rng.Uniform(-1, 1), rng.Uniform(-1, 1));
    const VectorXd goal = SubgoalProjection(raw, box);
    EXPECT_TRUE(box.Contains(goal));
    EXPECT_LT((SubgoalToRaw(goal, box) - raw).norm(), 1e-12);
  }
}

TEST(LowReplayBufferTest, ZeroDrawsGiveEmptyList) {
  LowReplayBuffer buffer(4);
  Rng rng(1);
  EXPECT_TRUE(buffer.Sample(0, rng).empty());
  buffer.Add(Record(1.0));
  EXPECT_TRUE(buffer.Sample(0, rng).empty());
}

TEST(LowReplayBufferTest, SingleRecordIsReturnedEveryTime) {
  LowReplayBuffer buffer(4);
  buffer.Add(Record(3.0));
  Rng rng(2);
  const auto batch = buffer.Sample(5, rng);
  ASSERT_EQ(batch.size(), 5u);
  for (const LowTransition& t : batch) EXPECT_EQ(t.s[0], 3.0);
}

TEST(LowReplayBufferTest, EmptyBufferIsUsageError) {
  LowReplayBuffer low(4);
  HighReplayBuffer high(4);
  Rng rng(3);
  EXPECT_THROW(low.Sample(1, rng), UsageError);
  EXPECT_THROW(high.Sample(1, rng), UsageError);
  EXPECT_THROW(high.SampleTrajectory(rng), UsageError);
}

TEST(LowReplayBufferTest, ChiSquareUniformity) {
  LowReplayBuffer buffer(10);
  for (int i = 0; i < 10; ++i) buffer.Add(Record(i));
  Rng rng(4);
  std::vector<int> counts(10, 0);
  const int draws = 100000;
  for (const LowTransition& t : buffer.Sample(draws, rng)) {
    ++counts[static_cast<int>(t.s[0])];
  }
  double chi2 = 0.0;
  const double expected = draws / 10.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // Upper 0.001 quantile of chi-square with 9 degrees of freedom.
  EXPECT_LT(chi2, 27.877);
}

TEST(LowReplayBufferTest, RingOverwritesOldest) {
  LowReplayBuffer buffer(3);
  for (int i = 0; i < 5; ++i) buffer.Add(Record(i));
  ASSERT_EQ(buffer.size(), 3u);
  EXPECT_EQ(buffer.records()[0].s[0], 3.0);
  EXPECT_EQ(buffer.records()[1].s[0], 4.0);
  EXPECT_EQ(buffer.records()[2].s[0], 2.0);
  EXPECT_EQ(buffer.next_slot(), 2u);
}

TEST(HighReplayBufferTest, EvictsWholeEpisodesOldestFirst) {
  HighReplayBuffer buffer(10);
  for (std::uint64_t id = 0; id < 6; ++id) {
    auto trajectory = std::make_shared<HighTrajectory>();
    trajectory->id = id;
    buffer.AddEpisode(trajectory, HighRecords(id, 3 + static_cast<int>(id % 2)));
    EXPECT_LE(buffer.size(), buffer.capacity());
    std::size_t total = 0;
    for (const auto& episode : buffer.episodes()) {
      EXPECT_EQ(episode.transitions.size(), 3 + episode.trajectory->id % 2);
      for (const HighTransition& t : episode.transitions) {
        EXPECT_EQ(t.trajectory_id, episode.trajectory->id);
      }
      total += episode.transitions.size();
    }
    EXPECT_EQ(total, buffer.size());
  }
  EXPECT_EQ(buffer.episodes().back().trajectory->id, 5u);
  EXPECT_EQ(buffer.episodes().front().trajectory->id, 4u);
}

TEST(HighReplayBufferTest, SamplesCarryTheirTrajectoryAndAreUniform) {
  HighReplayBuffer buffer(100);
  for (std::uint64_t id = 0; id < 3; ++id) {
    auto trajectory = std::make_shared<HighTrajectory>();
    trajectory->id = id;
    buffer.AddEpisode(trajectory, HighRecords(id, static_cast<int>(id) + 1));
  }
  Rng rng(6);
  std::vector<int> per_episode(3, 0);
  const int draws = 60000;
  for (const auto& sampled : buffer.Sample(draws, rng)) {
    ASSERT_EQ(sampled.transition.trajectory_id, sampled.trajectory->id);
    ++per_episode[sampled.trajectory->id];
  }
  // Episodes hold 1, 2 and 3 of the 6 transitions.
  for (int e = 0; e < 3; ++e) {
    const double p = (e + 1) / 6.0;
    const double sd = std::sqrt(draws * p * (1 - p));
    EXPECT_NEAR(per_episode[e], draws * p, 4.0 * sd);
  }
}

TEST(RolloutTest, SegmentCountIsCeilOfHorizonOverK) {
  MazeFixture f;
  for (int k : {1, 4, 7, 10, 60}) {
    RolloutConfig config;
    config.k = k;
    config.horizon = 60;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const EpisodeRecord record = f.Run(config, 100 * k + seed);
      if (record.success) continue;
      EXPECT_EQ(record.high.size(), static_cast<std::size_t>((60 + k - 1) / k));
      EXPECT_EQ(record.steps, 60);
      EXPECT_EQ(record.low.size(), 60u);
      EXPECT_EQ(record.trajectory->size(), static_cast<int>(record.high.size()));
      EXPECT_EQ(record.trajectory->achieved_tail.size(), record.high.size());
      EXPECT_EQ(record.episode_return, -60.0);
    }
  }
}

TEST(RolloutTest, KEqualToHorizonGivesOneHighTransition) {
  MazeFixture f;
  RolloutConfig config;
  config.k = 60;
  config.horizon = 60;
  const EpisodeRecord record = f.Run(config, 2);
  EXPECT_EQ(record.high.size(), 1u);
  EXPECT_EQ(record.high[0].steps, record.steps);
}

TEST(RolloutTest, EarlySuccessEndsEpisodeWithPartialSegment) {
  const OneStepEnv env;
  SacAgent high = MakeAgent(1, 1, 1, 3);
  SacAgent low = MakeAgent(1, 1, 1, 4);
  // A large positive bias on the mean makes every lower action positive.
  low.actor.params.setZero();
  low.actor.params[low.actor.params.size() - 2] = 5.0;
  RolloutConfig config;
  config.k = 10;
  config.horizon = 60;
  config.mode = ActionMode::kDeterministic;
  Rng e(1), h(2), l(3);
  const EpisodeRecord record =
      RolloutEpisode(high, low, env, config, {&e, &h, &l}, 9);
  EXPECT_TRUE(record.success);
  EXPECT_EQ(record.steps, 1);
  ASSERT_EQ(record.high.size(), 1u);
  EXPECT_EQ(record.high[0].steps, 1);
  EXPECT_TRUE(record.high[0].done);
  EXPECT_EQ(record.high[0].trajectory_id, 9u);
  EXPECT_EQ(record.episode_return, 0.0);
}

TEST(RolloutTest, ByteIdenticalAcrossRuns) {
  MazeFixture f;
  RolloutConfig config;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const EpisodeRecord a = f.Run(config, seed);
    const EpisodeRecord b = f.Run(config, seed);
    ASSERT_EQ(a.low.size(), b.low.size());
    for (std::size_t i = 0; i < a.low.size(); ++i) {
      EXPECT_EQ(a.low[i].s, b.low[i].s);
      EXPECT_EQ(a.low[i].a, b.low[i].a);
      EXPECT_EQ(a.low[i].s_next, b.low[i].s_next);
      EXPECT_EQ(a.low[i].r, b.low[i].r);
    }
    ASSERT_EQ(a.high.size(), b.high.size());
    for (std::size_t i = 0; i < a.high.size(); ++i) {
      EXPECT_EQ(a.high[i].g_t, b.high[i].g_t);
      EXPECT_EQ(a.high[i].s_next, b.high[i].s_next);
    }
    EXPECT_EQ(a.trajectory->achieved_tail, b.trajectory->achieved_tail);
  }
}

TEST(RolloutTest, ReplayingActionsReproducesSegmentEnd) {
  MazeFixture f;
  RolloutConfig config;
  config.k = 7;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const EpisodeRecord record = f.Run(config, seed);
    std::size_t cursor = 0;
    for (std::size_t seg = 0; seg < record.high.size(); ++seg) {
      const HighTransition& high = record.high[seg];
      EXPECT_EQ(high.segment, static_cast<int>(seg));
      EnvObservation obs = f.env.FromStateVector(high.s);
      for (int step = 0; step < high.steps; ++step) {
        const LowTransition& low = record.low[cursor++];
        EXPECT_EQ(low.s, f.env.StateVector(obs));
        EXPECT_EQ(low.g, high.g_t);
        obs = f.env.Step(obs, low.a);
      }
      EXPECT_EQ(f.env.StateVector(obs), high.s_next);
      EXPECT_EQ(obs.achieved_goal, record.trajectory->achieved_tail[seg]);
      EXPECT_EQ(high.s, record.trajectory->states[seg]);
    }
    EXPECT_EQ(cursor, record.low.size());
  }
}

TEST(RolloutTest, LowerRewardsMatchRecomputation) {
  MazeFixture f;
  RolloutConfig config;
  const double eps = f.env.spec().epsilon;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const EpisodeRecord record = f.Run(config, seed);
    for (const LowTransition& t : record.low) {
      const double r = SparseGoalReward(f.env.AchievedGoal(t.s_next), t.g, eps);
      EXPECT_EQ(t.r, r);
      EXPECT_EQ(t.done, r == 0.0);
    }
    for (const HighTransition& t : record.high) {
      EXPECT_TRUE(f.env.spec().goal_space.Contains(t.g_t));
    }
  }
}

TEST(RolloutTest, RejectsHorizonBelowK) {
  MazeFixture f;
  RolloutConfig config;
  config.k = 10;
  config.horizon = 5;
  EXPECT_THROW(f.Run(config, 1), ConfigError);
  config.k = 0;
  EXPECT_THROW(f.Run(config, 1), ConfigError);
}

TEST(RolloutTest, FlatEpisodeHasOneEntryPerStep) {
  MazeFixture f;
  RolloutConfig config;
  Rng e(1), h(2), l(3);
  const EpisodeRecord record =
      RolloutFlatEpisode(f.low, f.env, config, {&e, &h, &l}, 4);
  EXPECT_EQ(record.trajectory->size(), record.steps);
  EXPECT_EQ(record.high.size(), static_cast<std::size_t>(record.steps));
  for (const HighTransition& t : record.high) {
    EXPECT_EQ(t.steps, 1);
    EXPECT_LE(t.g_t.cwiseAbs().maxCoeff(), 1.0);
  }
}

TEST(HindsightLowTransitionsTest, GoalsComeFromSameOrLaterSteps) {
  MazeFixture f;
  RolloutConfig config;
  const EpisodeRecord record = f.Run(config, 3);
  const std::vector<LowTransition> segment(record.low.begin(),
                                           record.low.begin() + config.k);
  Rng rng(5);
  const auto relabeled = HindsightLowTransitions(segment, f.env, 4, rng);
  ASSERT_EQ(relabeled.size(), segment.size() * 4);
  const double eps = f.env.spec().epsilon;
  for (std::size_t i = 0; i < relabeled.size(); ++i) {
    const std::size_t source = i / 4;
    const LowTransition& t = relabeled[i];
    EXPECT_EQ(t.s, segment[source].s);
    EXPECT_EQ(t.a, segment[source].a);
    bool found = false;
    for (std::size_t j = source; j < segment.size(); ++j) {
      found |= t.g == f.env.AchievedGoal(segment[j].s_next);
    }
    EXPECT_TRUE(found);
    EXPECT_EQ(t.r, SparseGoalReward(f.env.AchievedGoal(t.s_next), t.g, eps));
  }
  // The last transition can only be relabeled with its own outcome.
  EXPECT_EQ(relabeled.back().r, 0.0);
  EXPECT_TRUE(relabeled.back().done);
}

TEST(MakeHighBatchTest, ActionsAreRawSubgoals) {
  MazeFixture f;
  RolloutConfig config;
  const EpisodeRecord record = f.Run(config, 4);
  const VectorXd rewards = VectorXd::LinSpaced(
      static_cast<Eigen::Index>(record.high.size()), 0.0, 1.0);
  const SacBatch batch = MakeHighBatch(record.high, rewards, f.high.dims,
                                       f.env.spec().goal_space);
  for (std::size_t i = 0; i < record.high.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    EXPECT_NEAR((SubgoalProjection(batch.actions.col(c),
                                   f.env.spec().goal_space) -
                 record.high[i].g_t)
                    .norm(),
                0.0, 1e-12);
    EXPECT_EQ(batch.rewards[c], rewards[c]);
  }
  EXPECT_THROW(MakeHighBatch(record.high, VectorXd::Zero(1000), f.high.dims,
                             f.env.spec().goal_space),
               StructuralError);
}

}  // namespace
}  // namespace piper
