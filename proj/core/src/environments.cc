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

#include "piper/environments.h"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

#include "piper/errors.h"

namespace piper {

using Eigen::VectorXd;

double SparseGoalReward(const VectorXd& x, const VectorXd& g, double epsilon) {
  PIPER_CHECK(x.size() == g.size(), "sparse reward: dimension mismatch");
  return (x - g).norm() > epsilon ? -1.0 : 0.0;
}

bool Box::Contains(const VectorXd& point) const {
  if (point.size() != low.size()) return false;
  return (point.array() >= low.array()).all() &&
         (point.array() <= high.array()).all();
}

// ---------------------------------------------------------------- MazeSpec

bool MazeSpec::IsWall(int col, int row) const {
  if (col < 0 || row < 0 || col >= width || row >= height) return true;
  return occupancy[static_cast<std::size_t>(row * width + col)] != 0;
}

bool MazeSpec::PointInWall(double x, double y) const {
  if (!(x >= 0.0 && y >= 0.0 && x < width && y < height)) return true;
  return IsWall(static_cast<int>(std::floor(x)),
                static_cast<int>(std::floor(y)));
}

int MazeSpec::FreeCellCount() const {
  return static_cast<int>(std::count(occupancy.begin(), occupancy.end(), 0));
}

std::string MazeSpec::ToText() const {
  std::ostringstream out;
  out << width << ' ' << height << ' ' << wall_col << ' ' << wall_row;
  for (int gate : gates) out << ' ' << gate;
  out << ' ';
  for (std::uint8_t cell : occupancy) out << (cell ? '1' : '0');
  return out.str();
}

MazeSpec MazeSpec::FromText(std::string_view text) {
  std::istringstream in{std::string(text)};
  MazeSpec maze;
  std::string bits;
  in >> maze.width >> maze.height >> maze.wall_col >> maze.wall_row >>
      maze.gates[0] >> maze.gates[1] >> maze.gates[2] >> maze.gates[3] >> bits;
  if (in.fail() || maze.width <= 0 || maze.height <= 0 ||
      bits.size() != static_cast<std::size_t>(maze.width * maze.height)) {
    throw IoError("malformed maze text");
  }
  for (char c : bits) {
    if (c != '0' && c != '1') throw IoError("malformed maze occupancy");
    maze.occupancy.push_back(c == '1' ? 1 : 0);
  }
  return maze;
}

namespace {

int UniformIn(Rng& rng, int low, int high) {
  return low + static_cast<int>(rng.UniformInt(
                   static_cast<std::uint64_t>(high - low + 1)));
}

}  // namespace

MazeSpec MakeMaze(std::uint64_t seed, int width, int height) {
  if (width < kMinMazeSize || height < kMinMazeSize) {
    throw ConfigError("maze width and height must be >= " +
                      std::to_string(kMinMazeSize) + ", got " +
                      std::to_string(width) + "x" + std::to_string(height));
  }
  Rng rng = Rng::Stream(seed, "maze");
  MazeSpec maze;
  maze.width = width;
  maze.height = height;
  // Interior cells are 1 .. W-2; the walls leave at least one interior
  // column (row) on either side.
  maze.wall_col = UniformIn(rng, 2, width - 3);
  maze.wall_row = UniformIn(rng, 2, height - 3);
  maze.gates[0] = UniformIn(rng, 1, maze.wall_col - 1);
  maze.gates[1] = UniformIn(rng, maze.wall_col + 1, width - 2);
  maze.gates[2] = UniformIn(rng, 1, maze.wall_row - 1);
  maze.gates[3] = UniformIn(rng, maze.wall_row + 1, height - 2);

  maze.occupancy.assign(static_cast<std::size_t>(width * height), 0);
  auto set = [&](int col, int row, std::uint8_t value) {
    maze.occupancy[static_cast<std::size_t>(row * width + col)] = value;
  };
  for (int col = 0; col < width; ++col) {
    set(col, 0, 1);
    set(col, height - 1, 1);
    set(col, maze.wall_row, 1);
  }
  for (int row = 0; row < height; ++row) {
    set(0, row, 1);
    set(width - 1, row, 1);
    set(maze.wall_col, row, 1);
  }
  set(maze.gates[0], maze.wall_row, 0);
  set(maze.gates[1], maze.wall_row, 0);
  set(maze.wall_col, maze.gates[2], 0);
  set(maze.wall_col, maze.gates[3], 0);
  PIPER_CHECK(MazeIsConnected(maze), "generated maze is not connected");
  return maze;
}

bool MazeIsConnected(const MazeSpec& maze) {
  const int cells = maze.width * maze.height;
  std::vector<char> seen(static_cast<std::size_t>(cells), 0);
  int start = -1;
  for (int i = 0; i < cells; ++i) {
    if (maze.occupancy[static_cast<std::size_t>(i)] == 0) {
      start = i;
      break;
    }
  }
  if (start < 0) return false;
  std::queue<int> frontier;
  frontier.push(start);
  seen[static_cast<std::size_t>(start)] = 1;
  int reached = 0;
  while (!frontier.empty()) {
    const int cell = frontier.front();
    frontier.pop();
    ++reached;
    const int col = cell % maze.width;
    const int row = cell / maze.width;
    const int neighbours[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    for (const auto& d : neighbours) {
      const int c = col + d[0];
      const int r = row + d[1];
      if (maze.IsWall(c, r)) continue;
      const int index = r * maze.width + c;
      if (seen[static_cast<std::size_t>(index)]) continue;
      seen[static_cast<std::size_t>(index)] = 1;
      frontier.push(index);
    }
  }
  return reached == maze.FreeCellCount();
}

// ------------------------------------------------------------- Environment

int Environment::state_dim() const { return position_dim() + layout_dim(); }

VectorXd Environment::StateVector(const EnvObservation& obs) const {
  VectorXd state(state_dim());
  state << obs.agent_position, obs.layout;
  return state;
}

EnvObservation Environment::FromStateVector(const VectorXd& state) const {
  PIPER_CHECK(state.size() == state_dim(), "state vector has wrong length");
  EnvObservation obs;
  obs.agent_position = state.head(position_dim());
  obs.layout = state.tail(layout_dim());
  obs.achieved_goal = AchievedFromPosition(obs.agent_position);
  return obs;
}

VectorXd Environment::StateCenter() const {
  return VectorXd::Zero(state_dim());
}

VectorXd Environment::StateHalfRange() const {
  return VectorXd::Ones(state_dim());
}

// ------------------------------------------------------------------ MazeEnv

MazeEnv::MazeEnv(MazeSpec maze, EnvSpec spec, bool include_layout)
    : maze_(std::move(maze)), spec_(std::move(spec)),
      include_layout_(include_layout) {
  if (!(spec_.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(spec_.step_scale > 0.0)) {
    throw ConfigError("step_scale must be positive");
  }
  if (spec_.horizon < 1) throw ConfigError("horizon must be positive");
  if (spec_.goal_space.dim() != 2) {
    throw ConfigError("maze goal space must be two-dimensional");
  }
}

EnvSpec MazeEnv::DefaultSpec(const MazeSpec& maze) {
  EnvSpec spec;
  spec.epsilon = 0.5;
  spec.step_scale = 0.5;
  spec.horizon = 60;
  spec.goal_space.low = Eigen::Vector2d(1.0, 1.0);
  spec.goal_space.high = Eigen::Vector2d(maze.width - 1.0, maze.height - 1.0);
  return spec;
}

VectorXd MazeEnv::Layout() const {
  if (!include_layout_) return {};
  VectorXd layout(static_cast<Eigen::Index>(maze_.occupancy.size()));
  for (std::size_t i = 0; i < maze_.occupancy.size(); ++i) {
    layout[static_cast<Eigen::Index>(i)] = maze_.occupancy[i];
  }
  return layout;
}

EnvObservation MazeEnv::Reset(Rng& rng, VectorXd* goal) const {
  std::vector<int> free_cells;
  for (int i = 0; i < maze_.width * maze_.height; ++i) {
    if (maze_.occupancy[static_cast<std::size_t>(i)] == 0) {
      free_cells.push_back(i);
    }
  }
  const int cell = free_cells[rng.UniformInt(free_cells.size())];
  EnvObservation obs;
  obs.agent_position =
      Eigen::Vector2d(cell % maze_.width + 0.5, cell / maze_.width + 0.5);
  obs.layout = Layout();
  obs.achieved_goal = obs.agent_position;

  const Box& box = spec_.goal_space;
  VectorXd candidate(2);
  do {
    candidate[0] = rng.Uniform(box.low[0], box.high[0]);
    candidate[1] = rng.Uniform(box.low[1], box.high[1]);
  } while (maze_.PointInWall(candidate[0], candidate[1]) ||
           (candidate - obs.achieved_goal).norm() <= spec_.epsilon);
  *goal = candidate;
  return obs;
}

EnvObservation MazeEnv::Step(const EnvObservation& obs,
                             const VectorXd& action) const {
  PIPER_CHECK(action.size() == 2, "maze action must be two-dimensional");
  EnvObservation next = obs;
  VectorXd& p = next.agent_position;
  for (int axis = 0; axis < 2; ++axis) {
    const double a = std::clamp(action[axis], -1.0, 1.0);
    VectorXd candidate = p;
    candidate[axis] += spec_.step_scale * a;
    if (!maze_.PointInWall(candidate[0], candidate[1])) p = candidate;
  }
  next.achieved_goal = p;
  return next;
}

VectorXd MazeEnv::StateCenter() const {
  VectorXd center = VectorXd::Constant(state_dim(), 0.5);
  center[0] = 0.5 * maze_.width;
  center[1] = 0.5 * maze_.height;
  return center;
}

VectorXd MazeEnv::StateHalfRange() const {
  VectorXd half = VectorXd::Constant(state_dim(), 0.5);
  half[0] = 0.5 * maze_.width;
  half[1] = 0.5 * maze_.height;
  return half;
}

// ------------------------------------------------------------------ PushEnv

PushEnv::PushEnv(PushGeometry geometry, EnvSpec spec)
    : geometry_(geometry), spec_(std::move(spec)) {
  if (!(spec_.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(spec_.step_scale > 0.0)) {
    throw ConfigError("step_scale must be positive");
  }
  if (spec_.horizon < 1) throw ConfigError("horizon must be positive");
  if (spec_.step_scale >= 2.0 * (geometry_.agent_radius + geometry_.block_half)) {
    throw ConfigError("push step_scale would let the agent tunnel the block");
  }
}

EnvSpec PushEnv::DefaultSpec(const PushGeometry& geometry) {
  EnvSpec spec;
  spec.epsilon = 0.5;
  spec.step_scale = 0.5;
  spec.horizon = 60;
  spec.goal_space.low = Eigen::Vector2d::Constant(1.0);
  spec.goal_space.high = Eigen::Vector2d::Constant(geometry.size - 1.0);
  return spec;
}

EnvObservation PushEnv::Reset(Rng& rng, VectorXd* goal) const {
  const double r = geometry_.agent_radius;
  const double h = geometry_.block_half;
  const double l = geometry_.size;
  const Box& box = spec_.goal_space;
  Eigen::Vector2d block(rng.Uniform(box.low[0], box.high[0]),
                        rng.Uniform(box.low[1], box.high[1]));
  Eigen::Vector2d agent;
  do {
    agent = Eigen::Vector2d(rng.Uniform(r, l - r), rng.Uniform(r, l - r));
  } while (std::abs(agent[0] - block[0]) < r + h &&
           std::abs(agent[1] - block[1]) < r + h);
  VectorXd target(2);
  do {
    target[0] = rng.Uniform(box.low[0], box.high[0]);
    target[1] = rng.Uniform(box.low[1], box.high[1]);
  } while ((target - VectorXd(block)).norm() <= spec_.epsilon);
  *goal = target;

  EnvObservation obs;
  obs.agent_position = Eigen::Vector4d(agent[0], agent[1], block[0], block[1]);
  obs.achieved_goal = block;
  return obs;
}

EnvObservation PushEnv::Step(const EnvObservation& obs,
                             const VectorXd& action) const {
  PIPER_CHECK(action.size() == 2, "push action must be two-dimensional");
  const double r = geometry_.agent_radius;
  const double h = geometry_.block_half;
  const double l = geometry_.size;
  const double contact = r + h;
  Eigen::Vector2d agent = obs.agent_position.head<2>();
  Eigen::Vector2d block = obs.agent_position.tail<2>();

  for (int axis = 0; axis < 2; ++axis) {
    const int other = 1 - axis;
    const double d = spec_.step_scale * std::clamp(action[axis], -1.0, 1.0);
    if (d == 0.0) continue;
    double moved = agent[axis] + d;
    if (moved < r || moved > l - r) continue;
    const double direction = d > 0.0 ? 1.0 : -1.0;
    const bool approaching = (block[axis] - agent[axis]) * direction > 0.0;
    const bool aligned = std::abs(agent[other] - block[other]) < contact;
    if (approaching && aligned && std::abs(moved - block[axis]) < contact) {
      double pushed = moved + direction * contact;
      if (pushed < h || pushed > l - h) {
        pushed = std::clamp(pushed, h, l - h);
        moved = pushed - direction * contact;
        // A block already against the wall cannot move; neither can the
        // agent behind it.
        if ((moved - agent[axis]) * direction < 0.0) moved = agent[axis];
      }
      block[axis] = pushed;
    }
    agent[axis] = moved;
  }

  EnvObservation next;
  next.agent_position = Eigen::Vector4d(agent[0], agent[1], block[0], block[1]);
  next.achieved_goal = block;
  return next;
}

VectorXd PushEnv::StateCenter() const {
  return VectorXd::Constant(4, 0.5 * geometry_.size);
}

VectorXd PushEnv::StateHalfRange() const {
  return VectorXd::Constant(4, 0.5 * geometry_.size);
}

}  // namespace piper
