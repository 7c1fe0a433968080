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

#include "piper/sac.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "piper/errors.h"

namespace piper {

using Eigen::ArrayXXd;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// tanh saturates to exactly +-1 in double precision; keep actions strictly
// inside the bounds.
constexpr double kTanhLimit = 1.0 - 1e-12;

struct PolicyPass {
  ForwardCache actor_cache;
  ArrayXXd noise;
  ArrayXXd log_std;
  ArrayXXd clamped;  // 1 where raw log-std was clamped
  ArrayXXd squashed;  // tanh(u)
  MatrixXd actions;
  VectorXd log_prob;
};

PolicyPass RunPolicy(const SacAgent& agent, const MatrixXd& obs_input,
                     const MatrixXd& noise, bool keep_cache) {
  const int d = agent.dims.action_dim;
  PIPER_CHECK(noise.rows() == d && noise.cols() == obs_input.cols(),
              "policy noise shape mismatch");
  PolicyPass pass;
  const MatrixXd out =
      agent.actor.Forward(obs_input, keep_cache ? &pass.actor_cache : nullptr);
  const ArrayXXd mean = out.topRows(d).array();
  const ArrayXXd raw_log_std = out.bottomRows(d).array();
  pass.log_std = raw_log_std.max(kLogStdMin).min(kLogStdMax);
  pass.clamped =
      ((raw_log_std < kLogStdMin) || (raw_log_std > kLogStdMax)).cast<double>();
  pass.noise = noise.array();
  const ArrayXXd pre = mean + pass.log_std.exp() * pass.noise;
  pass.squashed = pre.tanh().max(-kTanhLimit).min(kTanhLimit);

  const VectorXd center = agent.action_center();
  const VectorXd half = agent.action_half_range();
  pass.actions = (pass.squashed.colwise() * half.array()).matrix();
  pass.actions.colwise() += center;

  const double log_sqrt_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  const ArrayXXd per_coord =
      -0.5 * pass.noise.square() - pass.log_std - log_sqrt_2pi -
      (1.0 - pass.squashed.square() + kTanhLogEps).log();
  pass.log_prob = per_coord.colwise().sum().transpose().matrix();
  pass.log_prob.array() -= half.array().log().sum();
  return pass;
}

MatrixXd CriticInput(const MatrixXd& obs_input, const MatrixXd& actions) {
  MatrixXd input(obs_input.rows() + actions.rows(), obs_input.cols());
  input << obs_input, actions;
  return input;
}

}  // namespace

void SacHyper::Validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw ConfigError("sac gamma must lie in (0, 1)");
  }
  if (!(entropy_weight >= 0.0)) {
    throw ConfigError("sac entropy weight must be non-negative");
  }
  if (!(tau_critic > 0.0 && tau_critic <= 1.0)) {
    throw ConfigError("sac tau_critic must lie in (0, 1]");
  }
  if (!(actor_lr >= 0.0) || !(critic_lr >= 0.0)) {
    throw ConfigError("sac learning rates must be non-negative");
  }
  if (batch_size < 1) throw ConfigError("sac batch_size must be positive");
  if (action_low.size() != action_high.size() || action_low.size() == 0) {
    throw ConfigError("sac action bounds must be non-empty and equal length");
  }
  for (Index i = 0; i < action_low.size(); ++i) {
    if (!std::isfinite(action_low[i]) || !std::isfinite(action_high[i]) ||
        !(action_low[i] < action_high[i])) {
      throw ConfigError("sac action bounds must be finite with low < high");
    }
  }
}

SacAgent SacAgent::Create(const SacDims& dims, const SacHyper& hyper,
                          const SacArchitecture& arch, Rng& init_rng) {
  hyper.Validate();
  PIPER_CHECK(hyper.action_low.size() == dims.action_dim,
              "action bounds do not match action_dim");
  SacAgent agent;
  agent.dims = dims;
  agent.hyper = hyper;
  agent.input_center = VectorXd::Zero(dims.state_dim + dims.goal_dim);
  agent.input_half_range = VectorXd::Ones(dims.state_dim + dims.goal_dim);
  const int obs = dims.state_dim + dims.goal_dim;
  agent.actor = Network::Create(
      MakeMlpSpec(obs, arch.width, arch.hidden_layers, 2 * dims.action_dim,
                  arch.hidden_activation, Activation::kIdentity),
      hyper.actor_lr, init_rng);
  const NetSpec critic_spec =
      MakeMlpSpec(obs + dims.action_dim, arch.width, arch.hidden_layers, 1,
                  arch.hidden_activation, Activation::kIdentity);
  agent.critic1 = Network::Create(critic_spec, hyper.critic_lr, init_rng);
  agent.critic2 = Network::Create(critic_spec, hyper.critic_lr, init_rng);
  agent.target_critic1 = agent.critic1.params;
  agent.target_critic2 = agent.critic2.params;
  return agent;
}

MatrixXd SacAgent::ObservationInput(const MatrixXd& states,
                                    const MatrixXd& goals) const {
  PIPER_CHECK(states.rows() == dims.state_dim, "state dimension mismatch");
  PIPER_CHECK(goals.rows() == dims.goal_dim, "goal dimension mismatch");
  PIPER_CHECK(states.cols() == goals.cols(), "state/goal batch mismatch");
  MatrixXd input(dims.state_dim + dims.goal_dim, states.cols());
  input << states, goals;
  input.colwise() -= input_center;
  input.array().colwise() /= input_half_range.array();
  return input;
}

MatrixXd StandardNormal(Index rows, Index cols, Rng& rng) {
  MatrixXd noise(rows, cols);
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) noise(r, c) = rng.Normal();
  }
  return noise;
}

PolicySample SamplePolicy(const SacAgent& agent, const MatrixXd& states,
                          const MatrixXd& goals, const MatrixXd& noise) {
  PolicyPass pass =
      RunPolicy(agent, agent.ObservationInput(states, goals), noise, false);
  return {std::move(pass.actions), std::move(pass.log_prob)};
}

VectorXd SelectAction(const SacAgent& agent, const VectorXd& state,
                      const VectorXd& goal, ActionMode mode, Rng* rng) {
  MatrixXd noise = MatrixXd::Zero(agent.dims.action_dim, 1);
  if (mode == ActionMode::kStochastic) {
    PIPER_CHECK(rng != nullptr, "stochastic action selection needs an rng");
    noise = StandardNormal(agent.dims.action_dim, 1, *rng);
  }
  return SamplePolicy(agent, state, goal, noise).actions.col(0);
}

VectorXd CriticValues(const SacAgent& agent, const ParamVector& params,
                      const MatrixXd& states, const MatrixXd& goals,
                      const MatrixXd& actions) {
  const MatrixXd input =
      CriticInput(agent.ObservationInput(states, goals), actions);
  return NetForwardBatch(params, agent.critic1.spec, input).row(0).transpose();
}

VectorXd StateValues(const SacAgent& agent, const MatrixXd& states,
                     const MatrixXd& goals, Rng* rng) {
  const MatrixXd obs = agent.ObservationInput(states, goals);
  const MatrixXd noise =
      rng == nullptr ? MatrixXd::Zero(agent.dims.action_dim, states.cols())
                     : StandardNormal(agent.dims.action_dim, states.cols(), *rng);
  const PolicyPass pass = RunPolicy(agent, obs, noise, false);
  const MatrixXd input = CriticInput(obs, pass.actions);
  const VectorXd q1 = agent.critic1.Forward(input).row(0).transpose();
  const VectorXd q2 = agent.critic2.Forward(input).row(0).transpose();
  return q1.cwiseMin(q2) - agent.hyper.entropy_weight * pass.log_prob;
}

SacBatch SacBatch::Allocate(const SacDims& dims, Index size) {
  SacBatch batch;
  batch.states.resize(dims.state_dim, size);
  batch.goals.resize(dims.goal_dim, size);
  batch.actions.resize(dims.action_dim, size);
  batch.rewards.resize(size);
  batch.next_states.resize(dims.state_dim, size);
  batch.dones.resize(size);
  return batch;
}

VectorXd CriticTargets(const SacAgent& agent, const SacBatch& batch,
                       const MatrixXd& next_noise) {
  const MatrixXd next_obs =
      agent.ObservationInput(batch.next_states, batch.goals);
  const PolicyPass next = RunPolicy(agent, next_obs, next_noise, false);
  const MatrixXd input = CriticInput(next_obs, next.actions);
  const VectorXd q1 =
      NetForwardBatch(agent.target_critic1, agent.critic1.spec, input)
          .row(0)
          .transpose();
  const VectorXd q2 =
      NetForwardBatch(agent.target_critic2, agent.critic2.spec, input)
          .row(0)
          .transpose();
  const VectorXd soft_value =
      q1.cwiseMin(q2) - agent.hyper.entropy_weight * next.log_prob;
  return batch.rewards.array() + agent.hyper.gamma *
                                     (1.0 - batch.dones.array()) *
                                     soft_value.array();
}

double ActorLoss(const SacAgent& agent, const SacBatch& batch,
                 const MatrixXd& noise, VectorXd* actor_grad) {
  const Index n = batch.size();
  const int d = agent.dims.action_dim;
  const double alpha = agent.hyper.entropy_weight;
  const MatrixXd obs = agent.ObservationInput(batch.states, batch.goals);
  const PolicyPass pass = RunPolicy(agent, obs, noise, actor_grad != nullptr);
  const MatrixXd input = CriticInput(obs, pass.actions);

  ForwardCache cache1, cache2;
  const VectorXd q1 = agent.critic1.Forward(input, &cache1).row(0).transpose();
  const VectorXd q2 = agent.critic2.Forward(input, &cache2).row(0).transpose();
  const VectorXd q_min = q1.cwiseMin(q2);
  const double loss = (alpha * pass.log_prob - q_min).mean();
  if (actor_grad == nullptr) return loss;

  const MatrixXd ones = MatrixXd::Ones(1, n);
  MatrixXd input_grad1, input_grad2;
  NetBackward(agent.critic1.params, agent.critic1.spec, cache1, ones, nullptr,
              &input_grad1);
  NetBackward(agent.critic2.params, agent.critic2.spec, cache2, ones, nullptr,
              &input_grad2);
  const Index action_row = obs.rows();
  ArrayXXd dq_da(d, n);
  for (Index c = 0; c < n; ++c) {
    dq_da.col(c) = q1[c] <= q2[c]
                       ? input_grad1.col(c).segment(action_row, d).array()
                       : input_grad2.col(c).segment(action_row, d).array();
  }

  const ArrayXXd& t = pass.squashed;
  const ArrayXXd one_minus_t2 = 1.0 - t.square();
  const VectorXd half = agent.action_half_range();
  const ArrayXXd dloss_du =
      alpha * 2.0 * t * one_minus_t2 / (one_minus_t2 + kTanhLogEps) -
      (dq_da.colwise() * half.array()) * one_minus_t2;
  const ArrayXXd sigma = pass.log_std.exp();
  ArrayXXd dloss_dlogstd = dloss_du * sigma * pass.noise - alpha;
  dloss_dlogstd *= 1.0 - pass.clamped;

  MatrixXd output_grad(2 * d, n);
  output_grad.topRows(d) = dloss_du.matrix() / static_cast<double>(n);
  output_grad.bottomRows(d) = dloss_dlogstd.matrix() / static_cast<double>(n);
  NetBackward(agent.actor.params, agent.actor.spec, pass.actor_cache,
              output_grad, actor_grad, nullptr);
  return loss;
}

SacLosses SacUpdate(SacAgent& agent, const SacBatch& batch, Rng& rng) {
  const Index n = batch.size();
  if (n == 0) throw UsageError("sac_update: empty batch");
  const int d = agent.dims.action_dim;
  SacLosses losses;

  const VectorXd targets =
      CriticTargets(agent, batch, StandardNormal(d, n, rng));
  const MatrixXd input = CriticInput(
      agent.ObservationInput(batch.states, batch.goals), batch.actions);
  const BatchLoss regression = [&](const MatrixXd& q, MatrixXd* grad) {
    const VectorXd error = q.row(0).transpose() - targets;
    grad->row(0) = (2.0 / static_cast<double>(n)) * error.transpose();
    return error.squaredNorm() / static_cast<double>(n);
  };
  double loss1 = 0.0, loss2 = 0.0;
  VectorXd grad1 = NetGradient(agent.critic1.params, agent.critic1.spec, input,
                               regression, &loss1);
  VectorXd grad2 = NetGradient(agent.critic2.params, agent.critic2.spec, input,
                               regression, &loss2);
  agent.critic1.ApplyGradient(std::move(grad1));
  agent.critic2.ApplyGradient(std::move(grad2));
  losses.critic_loss = 0.5 * (loss1 + loss2);

  VectorXd actor_grad;
  losses.actor_loss =
      ActorLoss(agent, batch, StandardNormal(d, n, rng), &actor_grad);
  agent.actor.ApplyGradient(std::move(actor_grad));

  agent.target_critic1 = PolyakUpdate(agent.target_critic1,
                                      agent.critic1.params,
                                      agent.hyper.tau_critic);
  agent.target_critic2 = PolyakUpdate(agent.target_critic2,
                                      agent.critic2.params,
                                      agent.hyper.tau_critic);
  return losses;
}

}  // namespace piper
