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

#include "piper/trainer.h"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "piper/checkpoint.h"
#include "piper/errors.h"

namespace piper {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

SacHyper MakeHyper(const ExperimentConfig& c, int action_dim) {
  SacHyper hyper;
  hyper.gamma = c.gamma;
  hyper.entropy_weight = c.sac_alpha;
  hyper.tau_critic = c.tau_critic;
  hyper.actor_lr = c.actor_lr;
  hyper.critic_lr = c.critic_lr;
  hyper.batch_size = c.batch_size;
  hyper.action_low = VectorXd::Constant(action_dim, -1.0);
  hyper.action_high = VectorXd::Constant(action_dim, 1.0);
  return hyper;
}

SacAgent MakeAgent(const ExperimentConfig& c, const Environment& env,
                   Rng& init_rng) {
  SacDims dims{env.state_dim(), env.goal_dim(), env.action_dim()};
  SacArchitecture arch;
  arch.width = c.net_width;
  arch.hidden_layers = c.net_depth;
  SacAgent agent = SacAgent::Create(dims, MakeHyper(c, dims.action_dim), arch,
                                    init_rng);
  const Box& goals = env.spec().goal_space;
  agent.input_center.resize(dims.state_dim + dims.goal_dim);
  agent.input_center << env.StateCenter(), goals.center();
  agent.input_half_range.resize(dims.state_dim + dims.goal_dim);
  agent.input_half_range << env.StateHalfRange(), goals.half_extent();
  return agent;
}

RewardModel MakeRewardModel(const ExperimentConfig& c, const Environment& env,
                            Rng& init_rng) {
  const Box& goals = env.spec().goal_space;
  const int subgoal_dim =
      c.variant == Variant::kRflat ? env.action_dim() : goals.dim();
  RewardModel model =
      RewardModel::Create(env.state_dim(), goals.dim(), subgoal_dim,
                          c.reward_width, c.reward_depth, c.reward_lr,
                          init_rng);
  VectorXd sub_center = VectorXd::Zero(subgoal_dim);
  VectorXd sub_half = VectorXd::Ones(subgoal_dim);
  if (c.variant != Variant::kRflat) {
    sub_center = goals.center();
    sub_half = goals.half_extent();
  }
  model.input_center << env.StateCenter(), goals.center(), sub_center;
  model.input_half_range << env.StateHalfRange(), goals.half_extent(),
      sub_half;
  return model;
}

bool UsesPreferences(Variant v) { return v != Variant::kHier; }

double Mean(const VectorXd& v) { return v.size() == 0 ? 0.0 : v.mean(); }

}  // namespace

std::shared_ptr<const Environment> MakeEnvironment(
    const ExperimentConfig& config) {
  config.Validate();
  if (config.env == EnvKind::kMaze) {
    MazeSpec maze =
        MakeMaze(config.maze_seed, config.maze_width, config.maze_height);
    EnvSpec spec = MazeEnv::DefaultSpec(maze);
    spec.epsilon = config.epsilon;
    spec.horizon = config.horizon;
    return std::make_shared<MazeEnv>(std::move(maze), std::move(spec),
                                     config.include_layout);
  }
  PushGeometry geometry;
  EnvSpec spec = PushEnv::DefaultSpec(geometry);
  spec.epsilon = config.epsilon;
  spec.horizon = config.horizon;
  return std::make_shared<PushEnv>(geometry, std::move(spec));
}

EvalResult EvaluateAgents(const SacAgent& high, const SacAgent* low,
                          const Environment& env,
                          const ExperimentConfig& config, int episodes,
                          std::uint64_t seed) {
  EvalResult result;
  result.episodes = std::max(episodes, 0);
  if (episodes <= 0) {
    result.empty = true;
    return result;
  }
  Rng env_rng = Rng::Stream(seed, "eval-env");
  // Deterministic mode never draws from the policy streams.
  Rng unused(0);
  RolloutConfig rollout;
  rollout.k = config.k;
  rollout.horizon = config.horizon;
  rollout.mode = ActionMode::kDeterministic;
  const RolloutStreams streams{&env_rng, &unused, &unused};
  int successes = 0;
  for (int e = 0; e < episodes; ++e) {
    const EpisodeRecord record =
        low != nullptr ? RolloutEpisode(high, *low, env, rollout, streams, 0)
                       : RolloutFlatEpisode(high, env, rollout, streams, 0);
    successes += record.success ? 1 : 0;
  }
  result.success_rate = static_cast<double>(successes) / episodes;
  return result;
}

// ------------------------------------------------------------------ Trainer

Trainer::Trainer(const ExperimentConfig& config)
    : config_(config),
      env_(MakeEnvironment(config)),
      low_buffer_(static_cast<std::size_t>(config.low_buffer_capacity)),
      high_buffer_(static_cast<std::size_t>(config.high_buffer_capacity)),
      env_rng_(Rng::Stream(config.seed, "env")),
      high_rng_(Rng::Stream(config.seed, "actor-high")),
      low_rng_(Rng::Stream(config.seed, "actor-low")),
      pair_rng_(Rng::Stream(config.seed, "preference")),
      hindsight_rng_(Rng::Stream(config.seed, "hindsight")),
      goal_rng_(Rng::Stream(config.seed, "task-goal")),
      reward_rng_(Rng::Stream(config.seed, "reward")),
      replay_rng_(Rng::Stream(config.seed, "replay")),
      sac_rng_(Rng::Stream(config.seed, "sac")),
      her_rng_(Rng::Stream(config.seed, "her")),
      probe_rng_(Rng::Stream(config.seed, "probe")) {
  Rng init_rng = Rng::Stream(config.seed, "init");
  high_ = MakeAgent(config_, *env_, init_rng);
  low_ = MakeAgent(config_, *env_, init_rng);
  reward_ = MakeRewardModel(config_, *env_, init_rng);
  next_eval_step_ = config_.eval_interval;
}

double Trainer::LabelAlpha() const {
  if (config_.variant == Variant::kNoV || config_.variant == Variant::kRflat) {
    return 0.0;
  }
  return config_.alpha;
}

const ParamVector& Trainer::RelabelParams() const {
  return config_.variant == Variant::kNoTarget ? reward_.phi
                                               : reward_.phi_target;
}

VectorXd Trainer::HighRewards(const std::vector<HighTransition>& batch) const {
  VectorXd rewards(static_cast<Index>(batch.size()));
  if (!UsesPreferences(config_.variant)) {
    for (std::size_t i = 0; i < batch.size(); ++i) {
      rewards[static_cast<Index>(i)] = batch[i].r_sum;
    }
    return rewards;
  }
  const std::vector<HighTransition> relabeled =
      RelabelHighBatch(batch, reward_, RelabelParams());
  for (std::size_t i = 0; i < relabeled.size(); ++i) {
    rewards[static_cast<Index>(i)] = relabeled[i].r_sum;
  }
  return rewards;
}

EvalResult Trainer::Evaluate(int episodes, std::uint64_t seed) const {
  return EvaluateAgents(high_, is_flat() ? nullptr : &low_, *env_, config_,
                        episodes, seed);
}

void Trainer::Run(const std::function<void(const Trainer&)>& after_iteration) {
  while (!Done()) {
    Iterate();
    if (after_iteration) after_iteration(*this);
  }
}

const TrainLogRow& Trainer::Iterate() {
  TrainLogRow row;
  for (int e = 0; e < config_.episodes_per_iteration; ++e) CollectEpisode(row);
  row.env_step = env_step_;
  row.episode = episode_;
  if (UsesPreferences(config_.variant)) {
    AddPreferences(row);
    TrainRewardModel(row);
  }
  UpdatePolicies(row);
  MeasureProbe(row);
  if (env_step_ >= next_eval_step_) {
    const std::uint64_t eval_seed =
        MixSeed(config_.seed ^ MixSeed(static_cast<std::uint64_t>(env_step_)));
    row.eval_success = Evaluate(config_.eval_episodes, eval_seed).success_rate;
    while (next_eval_step_ <= env_step_) next_eval_step_ += config_.eval_interval;
  }
  log_.rows.push_back(row);
  return log_.rows.back();
}

void Trainer::CollectEpisode(TrainLogRow& row) {
  RolloutConfig rollout;
  rollout.k = config_.k;
  rollout.horizon = config_.horizon;
  rollout.mode = ActionMode::kStochastic;
  rollout.random_eps = config_.random_eps;
  rollout.noise_eps = config_.noise_eps;
  const RolloutStreams streams{&env_rng_, &high_rng_, &low_rng_};
  EpisodeRecord record =
      is_flat()
          ? RolloutFlatEpisode(high_, *env_, rollout, streams, next_trajectory_id_)
          : RolloutEpisode(high_, low_, *env_, rollout, streams,
                           next_trajectory_id_);
  ++next_trajectory_id_;
  ++episode_;
  env_step_ += record.steps;
  row.success = record.success ? 1 : 0;
  row.episode_return = record.episode_return;

  if (!is_flat()) {
    std::size_t begin = 0;
    for (const HighTransition& high : record.high) {
      const std::size_t end = begin + static_cast<std::size_t>(high.steps);
      const std::vector<LowTransition> segment(record.low.begin() + begin,
                                               record.low.begin() + end);
      for (const LowTransition& tr : segment) low_buffer_.Add(tr);
      if (config_.relabel_lower_her) {
        for (LowTransition& tr :
             HindsightLowTransitions(segment, *env_, config_.her_k, her_rng_)) {
          low_buffer_.Add(std::move(tr));
        }
      }
      begin = end;
    }
  }
  high_buffer_.AddEpisode(std::move(record.trajectory), std::move(record.high));
}

void Trainer::AddPreferences(TrainLogRow& row) {
  if (high_buffer_.num_episodes() < 2) return;
  const double alpha = LabelAlpha();
  const bool hindsight = config_.variant != Variant::kNoHr;
  std::int64_t labels = 0;
  std::int64_t informative = 0;
  for (int p = 0; p < config_.pairs_per_iteration; ++p) {
    const auto sigma1 = high_buffer_.SampleTrajectory(pair_rng_);
    auto sigma2 = high_buffer_.SampleTrajectory(pair_rng_);
    while (sigma2->id == sigma1->id) {
      sigma2 = high_buffer_.SampleTrajectory(pair_rng_);
    }
    const int n = std::min(sigma1->size(), sigma2->size());

    std::vector<VectorXd> goals;
    if (hindsight && n >= 2) {
      goals = SampleHindsightGoals(*sigma1, *sigma2, config_.hindsight_goals,
                                   hindsight_rng_, n);
    }
    if (config_.original_goal == OriginalGoal::kSampled) {
      VectorXd g;
      env_->Reset(goal_rng_, &g);
      goals.push_back(std::move(g));
    } else {
      goals.push_back(sigma1->g_star);
    }

    double value1 = 0.0;
    double value2 = 0.0;
    if (alpha != 0.0) {
      value1 = alpha * LowerValues(low_, *sigma1, n).sum();
      value2 = alpha * LowerValues(low_, *sigma2, n).sum();
    }
    for (VectorXd& g : goals) {
      PreferenceTuple tuple;
      tuple.sigma1 = sigma1;
      tuple.sigma2 = sigma2;
      tuple.length = n;
      tuple.y = LabelFromReturns(
          PilReturn(*sigma1, g, config_.epsilon, n) + value1,
          PilReturn(*sigma2, g, config_.epsilon, n) + value2, config_.tie_tol);
      tuple.g_hat = std::move(g);
      ++labels;
      informative += tuple.y.is_tie() ? 0 : 1;
      dataset_.push_back(std::move(tuple));
    }
  }
  label_stats_.labels += labels;
  label_stats_.informative += informative;
  if (labels > 0) {
    row.label_informative_fraction =
        static_cast<double>(informative) / static_cast<double>(labels);
  }
}

void Trainer::TrainRewardModel(TrainLogRow& row) {
  if (!dataset_.empty() && config_.reward_updates > 0) {
    double total = 0.0;
    for (int step = 0; step < config_.reward_updates; ++step) {
      total += TrainRewardModelStep(reward_, dataset_,
                                    config_.reward_batch_size, reward_rng_)
                   .loss;
      if (config_.variant != Variant::kNoTarget) {
        SoftUpdateRewardTarget(reward_, config_.tau);
      }
    }
    row.reward_model_loss = total / config_.reward_updates;
  }
}

void Trainer::UpdatePolicies(TrainLogRow& row) {
  if (env_step_ < config_.update_after || config_.n_batches == 0) return;
  double high_actor = 0.0, high_critic = 0.0, low_actor = 0.0, low_critic = 0.0;
  double reward_total = 0.0;
  std::int64_t reward_count = 0;
  const Box& goal_space = env_->spec().goal_space;
  for (int b = 0; b < config_.n_batches; ++b) {
    if (!is_flat() && !low_buffer_.empty()) {
      const SacBatch batch = MakeLowBatch(
          low_buffer_.Sample(config_.batch_size, replay_rng_), low_.dims);
      const SacLosses losses = SacUpdate(low_, batch, sac_rng_);
      low_actor += losses.actor_loss;
      low_critic += losses.critic_loss;
    }
    std::vector<HighTransition> transitions;
    for (HighReplayBuffer::Sampled& s :
         high_buffer_.Sample(config_.batch_size, replay_rng_)) {
      transitions.push_back(std::move(s.transition));
    }
    const VectorXd rewards = HighRewards(transitions);
    reward_total += rewards.sum();
    reward_count += rewards.size();
    const SacBatch batch = MakeHighBatch(transitions, rewards, high_.dims,
                                         goal_space, is_flat());
    const SacLosses losses = SacUpdate(high_, batch, sac_rng_);
    high_actor += losses.actor_loss;
    high_critic += losses.critic_loss;
  }
  const double inv = 1.0 / config_.n_batches;
  row.high_actor_loss = high_actor * inv;
  row.high_critic_loss = high_critic * inv;
  row.low_actor_loss = low_actor * inv;
  row.low_critic_loss = low_critic * inv;
  if (reward_count > 0) {
    row.mean_relabeled_reward = reward_total / static_cast<double>(reward_count);
  }
}

void Trainer::MeasureProbe(TrainLogRow& row) {
  if (!UsesPreferences(config_.variant)) return;
  if (probe_batch_.empty()) {
    if (high_buffer_.size() < static_cast<std::size_t>(config_.probe_size)) {
      return;
    }
    for (HighReplayBuffer::Sampled& s :
         high_buffer_.Sample(config_.probe_size, probe_rng_)) {
      probe_batch_.push_back(std::move(s.transition));
    }
    probe_previous_ = HighRewards(probe_batch_);
    next_probe_step_ = env_step_ + config_.probe_interval;
    return;
  }
  if (env_step_ < next_probe_step_) return;
  const VectorXd now = HighRewards(probe_batch_);
  row.probe_drift = Mean((now - probe_previous_).cwiseAbs());
  probe_drifts_.push_back(row.probe_drift);
  probe_previous_ = now;
  while (next_probe_step_ <= env_step_) next_probe_step_ += config_.probe_interval;
}

// --------------------------------------------------------------- checkpoint

namespace {

void WriteAgent(BinaryWriter& w, const std::string& prefix,
                const SacAgent& agent) {
  w.Net(prefix + ".actor", agent.actor);
  w.Net(prefix + ".critic1", agent.critic1);
  w.Net(prefix + ".critic2", agent.critic2);
  w.Named(prefix + ".target_critic1", agent.target_critic1);
  w.Named(prefix + ".target_critic2", agent.target_critic2);
}

void ReadAgent(BinaryReader& r, const std::string& prefix, SacAgent& agent) {
  r.Net(prefix + ".actor", agent.actor);
  r.Net(prefix + ".critic1", agent.critic1);
  r.Net(prefix + ".critic2", agent.critic2);
  agent.target_critic1 =
      r.Named(prefix + ".target_critic1", agent.critic1.params.size());
  agent.target_critic2 =
      r.Named(prefix + ".target_critic2", agent.critic2.params.size());
}

void WriteRow(BinaryWriter& w, const TrainLogRow& row) {
  w.I64(row.env_step);
  w.I64(row.episode);
  w.I64(row.success);
  for (double v : {row.episode_return, row.reward_model_loss,
                   row.high_actor_loss, row.high_critic_loss,
                   row.low_actor_loss, row.low_critic_loss,
                   row.mean_relabeled_reward, row.label_informative_fraction,
                   row.eval_success, row.probe_drift}) {
    w.F64(v);
  }
}

TrainLogRow ReadRow(BinaryReader& r) {
  TrainLogRow row;
  row.env_step = r.I64();
  row.episode = r.I64();
  row.success = static_cast<int>(r.I64());
  for (double* v : {&row.episode_return, &row.reward_model_loss,
                    &row.high_actor_loss, &row.high_critic_loss,
                    &row.low_actor_loss, &row.low_critic_loss,
                    &row.mean_relabeled_reward,
                    &row.label_informative_fraction, &row.eval_success,
                    &row.probe_drift}) {
    *v = r.F64();
  }
  return row;
}

// Config keys that may change between a checkpoint and its resumption.
ExperimentConfig ResumableView(ExperimentConfig c) {
  c.total_steps = 0;
  c.output_dir = "";
  c.checkpoint_interval = 0;
  return c;
}

void CheckResumable(const ExperimentConfig& stored,
                    const ExperimentConfig& requested) {
  if (ResumableView(stored) == ResumableView(requested)) return;
  std::istringstream a(ConfigToString(ResumableView(stored)));
  std::istringstream b(ConfigToString(ResumableView(requested)));
  std::string la, lb;
  while (std::getline(a, la) && std::getline(b, lb)) {
    if (la != lb) {
      throw ConfigError("resume: config differs from checkpoint: '" + lb +
                        "' vs stored '" + la + "'");
    }
  }
  throw ConfigError("resume: config differs from checkpoint");
}

}  // namespace

std::string Trainer::SerializeCheckpoint() const {
  BinaryWriter w;
  for (char c : kCheckpointMagic) w.U8(static_cast<std::uint8_t>(c));
  w.U32(kCheckpointVersion);
  w.String(ConfigToString(config_));

  w.Tag("counters");
  w.I64(env_step_);
  w.I64(episode_);
  w.U64(next_trajectory_id_);
  w.I64(next_eval_step_);
  w.I64(next_probe_step_);
  w.I64(label_stats_.labels);
  w.I64(label_stats_.informative);

  w.Tag("rng");
  for (const Rng* rng : {&env_rng_, &high_rng_, &low_rng_, &pair_rng_,
                         &hindsight_rng_, &goal_rng_, &reward_rng_, &replay_rng_,
                         &sac_rng_, &her_rng_, &probe_rng_}) {
    w.Random(*rng);
  }

  w.Tag("params");
  WriteAgent(w, "high", high_);
  WriteAgent(w, "low", low_);
  w.Named("reward.phi", reward_.phi);
  w.Named("reward.phi_target", reward_.phi_target);
  w.Adam(reward_.adam);

  // Trajectories referenced by the high buffer or the dataset, by id.
  std::map<std::uint64_t, const HighTrajectory*> trajectories;
  for (const HighReplayBuffer::Episode& e : high_buffer_.episodes()) {
    trajectories[e.trajectory->id] = e.trajectory.get();
  }
  for (const PreferenceTuple& t : dataset_) {
    trajectories[t.sigma1->id] = t.sigma1.get();
    trajectories[t.sigma2->id] = t.sigma2.get();
  }
  w.Tag("trajectories");
  w.U64(trajectories.size());
  for (const auto& [id, sigma] : trajectories) w.Trajectory(*sigma);

  w.Tag("high_buffer");
  w.U64(high_buffer_.episodes().size());
  for (const HighReplayBuffer::Episode& e : high_buffer_.episodes()) {
    w.U64(e.trajectory->id);
    w.U64(e.transitions.size());
    for (const HighTransition& tr : e.transitions) w.High(tr);
  }

  w.Tag("low_buffer");
  w.U64(low_buffer_.records().size());
  w.U64(low_buffer_.next_slot());
  for (const LowTransition& tr : low_buffer_.records()) w.Low(tr);

  w.Tag("dataset");
  w.U64(dataset_.size());
  for (const PreferenceTuple& t : dataset_) {
    w.U64(t.sigma1->id);
    w.U64(t.sigma2->id);
    w.I64(t.length);
    w.Vector(t.g_hat);
    w.F64(t.y.first);
    w.F64(t.y.second);
  }

  w.Tag("probe");
  w.U64(probe_batch_.size());
  for (const HighTransition& tr : probe_batch_) w.High(tr);
  w.Vector(probe_previous_);
  w.U64(probe_drifts_.size());
  for (double d : probe_drifts_) w.F64(d);

  w.Tag("log");
  w.U64(log_.rows.size());
  for (const TrainLogRow& row : log_.rows) WriteRow(w, row);
  w.Tag("end");
  return w.bytes();
}

Trainer Trainer::FromCheckpoint(const std::string& bytes,
                                const ExperimentConfig* config) {
  BinaryReader r(bytes);
  for (char c : kCheckpointMagic) {
    if (r.U8() != static_cast<std::uint8_t>(c)) {
      throw IoError("not a checkpoint file");
    }
  }
  const std::uint32_t version = r.U32();
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  const ExperimentConfig stored = ParseConfigString(r.String());
  ExperimentConfig effective = stored;
  if (config != nullptr) {
    CheckResumable(stored, *config);
    effective = *config;
  }
  Trainer t(effective);

  r.ExpectTag("counters");
  t.env_step_ = r.I64();
  t.episode_ = r.I64();
  t.next_trajectory_id_ = r.U64();
  t.next_eval_step_ = r.I64();
  t.next_probe_step_ = r.I64();
  t.label_stats_.labels = r.I64();
  t.label_stats_.informative = r.I64();

  r.ExpectTag("rng");
  for (Rng* rng : {&t.env_rng_, &t.high_rng_, &t.low_rng_, &t.pair_rng_,
                   &t.hindsight_rng_, &t.goal_rng_, &t.reward_rng_, &t.replay_rng_,
                   &t.sac_rng_, &t.her_rng_, &t.probe_rng_}) {
    r.Random(*rng);
  }

  r.ExpectTag("params");
  ReadAgent(r, "high", t.high_);
  ReadAgent(r, "low", t.low_);
  t.reward_.phi = r.Named("reward.phi", t.reward_.phi.size());
  t.reward_.phi_target = r.Named("reward.phi_target", t.reward_.phi.size());
  t.reward_.adam = r.Adam();

  r.ExpectTag("trajectories");
  std::map<std::uint64_t, std::shared_ptr<const HighTrajectory>> trajectories;
  const std::uint64_t num_trajectories = r.U64();
  for (std::uint64_t i = 0; i < num_trajectories; ++i) {
    auto sigma = std::make_shared<HighTrajectory>(r.Trajectory());
    trajectories[sigma->id] = std::move(sigma);
  }
  const auto lookup = [&trajectories](std::uint64_t id) {
    const auto it = trajectories.find(id);
    if (it == trajectories.end()) {
      throw IoError("checkpoint: unknown trajectory id " + std::to_string(id));
    }
    return it->second;
  };

  r.ExpectTag("high_buffer");
  const std::uint64_t num_episodes = r.U64();
  for (std::uint64_t e = 0; e < num_episodes; ++e) {
    auto sigma = lookup(r.U64());
    std::vector<HighTransition> transitions(r.U64());
    for (HighTransition& tr : transitions) tr = r.High();
    t.high_buffer_.AddEpisode(std::move(sigma), std::move(transitions));
  }

  r.ExpectTag("low_buffer");
  std::vector<LowTransition> low(r.U64());
  const std::uint64_t next_slot = r.U64();
  for (LowTransition& tr : low) tr = r.Low();
  t.low_buffer_.Restore(std::move(low), next_slot);

  r.ExpectTag("dataset");
  t.dataset_.resize(r.U64());
  for (PreferenceTuple& tuple : t.dataset_) {
    tuple.sigma1 = lookup(r.U64());
    tuple.sigma2 = lookup(r.U64());
    tuple.length = static_cast<int>(r.I64());
    tuple.g_hat = r.Vector();
    tuple.y.first = r.F64();
    tuple.y.second = r.F64();
    if (!tuple.y.IsValid()) throw IoError("checkpoint: invalid label");
  }

  r.ExpectTag("probe");
  t.probe_batch_.resize(r.U64());
  for (HighTransition& tr : t.probe_batch_) tr = r.High();
  t.probe_previous_ = r.Vector();
  t.probe_drifts_.resize(r.U64());
  for (double& d : t.probe_drifts_) d = r.F64();

  r.ExpectTag("log");
  t.log_.rows.resize(r.U64());
  for (TrainLogRow& row : t.log_.rows) row = ReadRow(r);
  r.ExpectTag("end");
  if (!r.AtEnd()) throw IoError("checkpoint: trailing bytes");
  return t;
}

Trainer Trainer::LoadCheckpoint(const std::string& path,
                                const ExperimentConfig* config) {
  return FromCheckpoint(ReadFile(path), config);
}

}  // namespace piper
