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

#ifndef PIPER_SAC_H_
#define PIPER_SAC_H_

// Goal-conditioned soft actor-critic with a squashed-Gaussian actor, twin
// critics, Polyak-blended target critics and a fixed entropy weight.

#include <Eigen/Core>

#include "piper/diffmath.h"
#include "piper/rng.h"

namespace piper {

struct SacHyper {
  double gamma = 0.95;
  double entropy_weight = 0.05;
  double tau_critic = 0.8;
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  int batch_size = 256;
  Eigen::VectorXd action_low;
  Eigen::VectorXd action_high;

  // Throws ConfigError on out-of-range values.
  void Validate() const;
};

struct SacDims {
  int state_dim = 0;
  int goal_dim = 0;
  int action_dim = 0;
};

struct SacArchitecture {
  int width = 64;
  int hidden_layers = 3;
  Activation hidden_activation = Activation::kRelu;
};

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;
// Stabilizer inside log(1 - tanh(u)^2 + c).
inline constexpr double kTanhLogEps = 1e-6;

struct SacAgent {
  SacDims dims;
  SacHyper hyper;
  // Affine normalization applied to the concatenated [state, goal] input of
  // both actor and critics: (x - input_center) / input_half_range.
  Eigen::VectorXd input_center;
  Eigen::VectorXd input_half_range;

  Network actor;    // [state, goal] -> [mean, log_std]
  Network critic1;  // [state, goal, action] -> Q
  Network critic2;
  ParamVector target_critic1;
  ParamVector target_critic2;

  static SacAgent Create(const SacDims& dims, const SacHyper& hyper,
                         const SacArchitecture& arch, Rng& init_rng);

  // Column-per-sample normalized [state; goal] block.
  Eigen::MatrixXd ObservationInput(const Eigen::MatrixXd& states,
                                   const Eigen::MatrixXd& goals) const;
  Eigen::VectorXd action_center() const {
    return 0.5 * (hyper.action_low + hyper.action_high);
  }
  Eigen::VectorXd action_half_range() const {
    return 0.5 * (hyper.action_high - hyper.action_low);
  }
};

enum class ActionMode { kStochastic, kDeterministic };

// Stochastic mode requires rng. Output lies strictly inside the bounds.
Eigen::VectorXd SelectAction(const SacAgent& agent,
                             const Eigen::VectorXd& state,
                             const Eigen::VectorXd& goal, ActionMode mode,
                             Rng* rng);

// Squashed-Gaussian policy evaluated on a batch with fixed standard-normal
// noise (zero noise gives the deterministic mean action).
struct PolicySample {
  Eigen::MatrixXd actions;   // action_dim x batch, inside the bounds
  Eigen::VectorXd log_prob;  // batch
};
PolicySample SamplePolicy(const SacAgent& agent, const Eigen::MatrixXd& states,
                          const Eigen::MatrixXd& goals,
                          const Eigen::MatrixXd& noise);

// Q-values of a batch under the given critic parameters.
Eigen::VectorXd CriticValues(const SacAgent& agent, const ParamVector& params,
                             const Eigen::MatrixXd& states,
                             const Eigen::MatrixXd& goals,
                             const Eigen::MatrixXd& actions);

// V(s, g) = min(Q1, Q2)(s, g, a) - entropy_weight * log pi(a | s, g) at the
// mean action (rng == nullptr) or one sampled action.
Eigen::VectorXd StateValues(const SacAgent& agent,
                            const Eigen::MatrixXd& states,
                            const Eigen::MatrixXd& goals, Rng* rng);

// One column per transition.
struct SacBatch {
  Eigen::MatrixXd states;
  Eigen::MatrixXd goals;
  Eigen::MatrixXd actions;
  Eigen::VectorXd rewards;
  Eigen::MatrixXd next_states;
  Eigen::VectorXd dones;

  Eigen::Index size() const { return rewards.size(); }
  // Allocates for `size` transitions of the given dimensions.
  static SacBatch Allocate(const SacDims& dims, Eigen::Index size);
};

// Bootstrapped critic targets using target critics only:
// r + gamma (1 - done) (min target Q(s', g, a') - alpha log pi(a' | s', g)).
Eigen::VectorXd CriticTargets(const SacAgent& agent, const SacBatch& batch,
                              const Eigen::MatrixXd& next_noise);

// Mean of alpha log pi(a~ | s, g) - min(Q1, Q2)(s, g, a~) with reparameterized
// a~. Writes the gradient with respect to actor parameters when non-null.
double ActorLoss(const SacAgent& agent, const SacBatch& batch,
                 const Eigen::MatrixXd& noise, Eigen::VectorXd* actor_grad);

struct SacLosses {
  double actor_loss = 0.0;
  double critic_loss = 0.0;
};

// Critic regression, actor step, then target blending. Throws UsageError on
// an empty batch.
SacLosses SacUpdate(SacAgent& agent, const SacBatch& batch, Rng& rng);

Eigen::MatrixXd StandardNormal(Eigen::Index rows, Eigen::Index cols, Rng& rng);

}  // namespace piper

#endif  // PIPER_SAC_H_
