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

#ifndef PIPER_ENVIRONMENTS_H_
#define PIPER_ENVIRONMENTS_H_

// Deterministic goal-conditioned sparse-reward environments: a randomized
// four-room point maze and a planar block-push surrogate.

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "piper/rng.h"

namespace piper {

// 0 iff ||x - g||_2 <= epsilon, else -1. Serves as both the lower-level
// reward (g = subgoal) and the segment reward used for preferences (g = final
// or hindsight goal).
double SparseGoalReward(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                        double epsilon);

// Axis-aligned box over achieved-goal coordinates.
struct Box {
  Eigen::VectorXd low;
  Eigen::VectorXd high;

  int dim() const { return static_cast<int>(low.size()); }
  Eigen::VectorXd center() const { return 0.5 * (low + high); }
  Eigen::VectorXd half_extent() const { return 0.5 * (high - low); }
  bool Contains(const Eigen::VectorXd& point) const;
};

struct EnvSpec {
  double epsilon = 0.5;
  double step_scale = 0.5;
  int horizon = 60;
  Box goal_space;
};

// Four-room grid maze. Cells are unit squares; cell (col, row) covers
// [col, col + 1) x [row, row + 1). The outer ring of cells is wall. A
// vertical wall runs along column wall_col and a horizontal wall along row
// wall_row, each with one gate per half.
struct MazeSpec {
  int width = 0;
  int height = 0;
  int wall_col = 0;
  int wall_row = 0;
  // {column of the gate in the horizontal wall left of wall_col,
  //  column of the gate in the horizontal wall right of wall_col,
  //  row of the gate in the vertical wall above wall_row,
  //  row of the gate in the vertical wall below wall_row}
  std::array<int, 4> gates{};
  // Row-major, 1 = wall.
  std::vector<std::uint8_t> occupancy;

  bool IsWall(int col, int row) const;
  bool IsFree(int col, int row) const { return !IsWall(col, row); }
  // Wall test for a continuous point; points outside the grid count as wall.
  bool PointInWall(double x, double y) const;
  int FreeCellCount() const;

  // "W H W_P H_P g0 g1 g2 g3 <occupancy bits>"
  std::string ToText() const;
  static MazeSpec FromText(std::string_view text);

  friend bool operator==(const MazeSpec&, const MazeSpec&) = default;
};

// Throws ConfigError when width or height is below kMinMazeSize.
MazeSpec MakeMaze(std::uint64_t seed, int width, int height);
inline constexpr int kMinMazeSize = 5;

// Every free cell reachable from every other free cell (4-connectivity).
bool MazeIsConnected(const MazeSpec& maze);

struct EnvObservation {
  // Agent position (maze) or agent followed by block position (push).
  Eigen::VectorXd agent_position;
  // Occupancy copy (maze) or empty (push).
  Eigen::VectorXd layout;
  Eigen::VectorXd achieved_goal;

  friend bool operator==(const EnvObservation& a, const EnvObservation& b) {
    return a.agent_position == b.agent_position && a.layout == b.layout &&
           a.achieved_goal == b.achieved_goal;
  }
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual const EnvSpec& spec() const = 0;
  virtual int action_dim() const = 0;
  int goal_dim() const { return spec().goal_space.dim(); }
  int state_dim() const;

  // Writes the final goal into *goal. The goal is never within epsilon of the
  // starting achieved goal.
  virtual EnvObservation Reset(Rng& rng, Eigen::VectorXd* goal) const = 0;
  // Action entries are clipped to [-1, 1].
  virtual EnvObservation Step(const EnvObservation& obs,
                              const Eigen::VectorXd& action) const = 0;

  // Flat state: [agent_position, layout].
  Eigen::VectorXd StateVector(const EnvObservation& obs) const;
  EnvObservation FromStateVector(const Eigen::VectorXd& state) const;
  Eigen::VectorXd AchievedGoal(const Eigen::VectorXd& state) const {
    return FromStateVector(state).achieved_goal;
  }
  // Per-coordinate state centre and half-range used to normalize network
  // inputs.
  virtual Eigen::VectorXd StateCenter() const;
  virtual Eigen::VectorXd StateHalfRange() const;

  bool IsSuccess(const EnvObservation& obs, const Eigen::VectorXd& goal) const {
    return SparseGoalReward(obs.achieved_goal, goal, spec().epsilon) == 0.0;
  }

 protected:
  virtual int position_dim() const = 0;
  virtual int layout_dim() const = 0;
  virtual Eigen::VectorXd AchievedFromPosition(
      const Eigen::VectorXd& position) const = 0;
  virtual Eigen::VectorXd Layout() const = 0;
};

class MazeEnv : public Environment {
 public:
  // include_layout: whether the state carries the occupancy array.
  MazeEnv(MazeSpec maze, EnvSpec spec, bool include_layout = true);

  // Goal space is the interior of the grid, [1, W - 1] x [1, H - 1].
  static EnvSpec DefaultSpec(const MazeSpec& maze);

  std::string name() const override { return "maze"; }
  const EnvSpec& spec() const override { return spec_; }
  int action_dim() const override { return 2; }
  const MazeSpec& maze() const { return maze_; }

  EnvObservation Reset(Rng& rng, Eigen::VectorXd* goal) const override;
  EnvObservation Step(const EnvObservation& obs,
                      const Eigen::VectorXd& action) const override;
  Eigen::VectorXd StateCenter() const override;
  Eigen::VectorXd StateHalfRange() const override;

 protected:
  int position_dim() const override { return 2; }
  int layout_dim() const override {
    return include_layout_ ? static_cast<int>(maze_.occupancy.size()) : 0;
  }
  Eigen::VectorXd AchievedFromPosition(
      const Eigen::VectorXd& position) const override {
    return position;
  }
  Eigen::VectorXd Layout() const override;

 private:
  MazeSpec maze_;
  EnvSpec spec_;
  bool include_layout_;
};

// Square walled plane [0, size]^2 with a circular agent and a square block.
// Contact is resolved one axis at a time: an agent move that would overlap
// the block pushes the block by the overlap along that axis.
struct PushGeometry {
  double size = 5.0;
  double agent_radius = 0.3;
  double block_half = 0.3;
};

class PushEnv : public Environment {
 public:
  PushEnv() : PushEnv(PushGeometry{}) {}
  explicit PushEnv(const PushGeometry& geometry)
      : PushEnv(geometry, DefaultSpec(geometry)) {}
  PushEnv(PushGeometry geometry, EnvSpec spec);

  static EnvSpec DefaultSpec(const PushGeometry& geometry);

  std::string name() const override { return "push"; }
  const EnvSpec& spec() const override { return spec_; }
  int action_dim() const override { return 2; }
  const PushGeometry& geometry() const { return geometry_; }

  EnvObservation Reset(Rng& rng, Eigen::VectorXd* goal) const override;
  EnvObservation Step(const EnvObservation& obs,
                      const Eigen::VectorXd& action) const override;
  Eigen::VectorXd StateCenter() const override;
  Eigen::VectorXd StateHalfRange() const override;

 protected:
  int position_dim() const override { return 4; }
  int layout_dim() const override { return 0; }
  Eigen::VectorXd AchievedFromPosition(
      const Eigen::VectorXd& position) const override {
    return position.tail<2>();
  }
  Eigen::VectorXd Layout() const override { return {}; }

 private:
  PushGeometry geometry_;
  EnvSpec spec_;
};

}  // namespace piper

#endif  // PIPER_ENVIRONMENTS_H_
