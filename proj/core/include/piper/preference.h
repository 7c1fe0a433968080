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

#ifndef PIPER_PREFERENCE_H_
#define PIPER_PREFERENCE_H_

// Preference-based high-level reward learning: primitive-in-the-loop labels
// over high-level trajectories, hindsight goals, value regularization,
// Bradley-Terry training with a soft-updated target copy, reward relabeling
// of sampled high-level batches, and the closed-form subgoal densities of
// the KL-regularized objective.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "piper/diffmath.h"
#include "piper/hierarchy.h"
#include "piper/rng.h"
#include "piper/sac.h"

namespace piper {

inline constexpr double kTieTolerance = 1e-6;
inline constexpr double kMinLogProbability = -27.631021115928547;  // log(1e-12)
inline constexpr int kHindsightGoalsPerPair = 4;

// y in {(1, 0), (0, 1), (0.5, 0.5)}.
struct PreferenceLabel {
  double first = 0.5;
  double second = 0.5;

  static PreferenceLabel FirstPreferred() { return {1.0, 0.0}; }
  static PreferenceLabel SecondPreferred() { return {0.0, 1.0}; }
  static PreferenceLabel Tie() { return {0.5, 0.5}; }
  bool is_tie() const { return first == 0.5; }
  bool IsValid() const;

  friend bool operator==(const PreferenceLabel&,
                         const PreferenceLabel&) = default;
};

// Both trajectories are compared over their first `length` entries.
struct PreferenceTuple {
  std::shared_ptr<const HighTrajectory> sigma1;
  std::shared_ptr<const HighTrajectory> sigma2;
  int length = 0;
  Eigen::VectorXd g_hat;
  PreferenceLabel y;
};

// r_phi(state, goal, subgoal) with a tanh head. Inputs are normalized by a
// fixed affine map over the concatenation [state, goal, subgoal].
struct RewardModel {
  int state_dim = 0;
  int goal_dim = 0;
  int subgoal_dim = 0;
  NetSpec spec;
  ParamVector phi;
  ParamVector phi_target;
  AdamState adam;
  Eigen::VectorXd input_center;
  Eigen::VectorXd input_half_range;

  // phi_target starts as a copy of phi.
  static RewardModel Create(int state_dim, int goal_dim, int subgoal_dim,
                            int width, int hidden_layers, double learning_rate,
                            Rng& init_rng);

  Eigen::MatrixXd Input(const Eigen::MatrixXd& states,
                        const Eigen::MatrixXd& goals,
                        const Eigen::MatrixXd& subgoals) const;
  // Per-column rewards under the given parameters (phi or phi_target).
  Eigen::VectorXd Rewards(const ParamVector& params,
                          const Eigen::MatrixXd& states,
                          const Eigen::MatrixXd& goals,
                          const Eigen::MatrixXd& subgoals) const;
};

// Sum over the first n segments of SparseGoalReward(achieved_tail[i], g).
// n defaults to the full trajectory.
double PilReturn(const HighTrajectory& sigma, const Eigen::VectorXd& g,
                 double epsilon, int n = -1);

// Lower-level value min(Q1, Q2)(s, g, a) - alpha_sac log pi(a | s, g) at the
// mean action (rng == nullptr) or one sampled action.
double LowerValue(const SacAgent& low, const Eigen::VectorXd& s,
                  const Eigen::VectorXd& g, Rng* rng = nullptr);
// Deterministic lower values at each of the first n (state, subgoal) entries.
Eigen::VectorXd LowerValues(const SacAgent& low, const HighTrajectory& sigma,
                            int n = -1);

// PilReturn + alpha * sum of deterministic lower values.
double RegularizedReturn(const HighTrajectory& sigma, const Eigen::VectorXd& g,
                         double epsilon, double alpha, const SacAgent& low,
                         int n = -1);

// Achieved goals at entry indices 1 .. n-1 of both trajectories.
std::vector<Eigen::VectorXd> HindsightCandidates(const HighTrajectory& sigma1,
                                                 const HighTrajectory& sigma2,
                                                 int n = -1);
// `count` goals drawn uniformly from HindsightCandidates. With n < 2 there is
// no candidate and the result is just {sigma1.g_star}.
std::vector<Eigen::VectorXd> SampleHindsightGoals(const HighTrajectory& sigma1,
                                                  const HighTrajectory& sigma2,
                                                  int count, Rng& rng,
                                                  int n = -1);

PreferenceLabel LabelFromReturns(double return1, double return2,
                                 double tie_tol = kTieTolerance);
// Throws StructuralError when the compared lengths differ.
PreferenceLabel MakeLabel(const HighTrajectory& sigma1,
                          const HighTrajectory& sigma2,
                          const Eigen::VectorXd& g_hat, double epsilon,
                          double alpha, const SacAgent& low,
                          double tie_tol = kTieTolerance);

// logistic(s1 - s2).
double BtProbabilityFromSums(double s1, double s2);
// P[sigma1 > sigma2] with segment sums under the online parameters.
double BtProbability(const RewardModel& model, const HighTrajectory& sigma1,
                     const HighTrajectory& sigma2, const Eigen::VectorXd& g);

// Mean cross-entropy over the batch; gradient with respect to phi when
// requested.
double RewardModelLoss(const RewardModel& model,
                       const std::vector<PreferenceTuple>& batch,
                       Eigen::VectorXd* grad = nullptr);

struct RewardTrainResult {
  double loss = 0.0;  // before the step
  bool skipped = false;
};
// One Adam step on a uniform mini-batch drawn with replacement. An empty
// dataset is a no-op returning {0, skipped}.
RewardTrainResult TrainRewardModelStep(
    RewardModel& model, const std::vector<PreferenceTuple>& dataset,
    int batch_size, Rng& rng);

// phi_target <- tau phi + (1 - tau) phi_target.
void SoftUpdateRewardTarget(RewardModel& model, double tau);

// Fresh records with r_sum replaced by r(s, g_star, g_t) under `params`.
std::vector<HighTransition> RelabelHighBatch(
    const std::vector<HighTransition>& batch, const RewardModel& model,
    const ParamVector& params);
// Relabels with the target parameters.
inline std::vector<HighTransition> RelabelHighBatch(
    const std::vector<HighTransition>& batch, const RewardModel& model) {
  return RelabelHighBatch(batch, model, model.phi_target);
}

struct SubgoalDistribution {
  std::vector<Eigen::VectorXd> candidates;
  Eigen::VectorXd probabilities;
  double normalizer = 1.0;  // Z
  double log_normalizer = 0.0;
};

struct RegPolicyDistribution {
  std::vector<Eigen::VectorXd> candidates;
  Eigen::VectorXd probabilities;
  double normalizer = 1.0;  // Z_hat
  double log_normalizer = 0.0;
  double m = 0.0;  // alpha / beta
};

struct RegObjectiveTerms {
  double entropy = 0.0;  // H = -sum pi log pi
  double m_hat = 0.0;    // beta H - beta log Z_hat
  double beta = 1.0;
  double alpha = 0.0;
};

// Softmax of (alpha / beta) V over candidates. Throws ConfigError for
// beta <= 0.
RegPolicyDistribution RegPolicyFromValues(
    const Eigen::VectorXd& values, double alpha, double beta,
    std::vector<Eigen::VectorXd> candidates = {});
RegPolicyDistribution RegPolicyDensity(
    const SacAgent& low, const Eigen::VectorXd& s,
    const std::vector<Eigen::VectorXd>& candidates, double alpha, double beta);

// Softmax of (r^s + alpha V) / beta.
SubgoalDistribution OptimalHighDensity(
    const Eigen::VectorXd& rs_values, const Eigen::VectorXd& values,
    double alpha, double beta, std::vector<Eigen::VectorXd> candidates = {});

RegObjectiveTerms ComputeRegObjectiveTerms(const Eigen::VectorXd& policy,
                                           const RegPolicyDistribution& reg,
                                           double alpha, double beta);

// One-step KL-regularized objective
// sum pi r^s - beta KL(pi || pi_reg).
double KlRegularizedObjective(const Eigen::VectorXd& policy,
                              const Eigen::VectorXd& rs_values,
                              const RegPolicyDistribution& reg, double beta);
// The same objective in value-regularized form:
// sum pi (r^s + alpha V) + m_hat.
double ValueRegularizedObjective(const Eigen::VectorXd& policy,
                                 const Eigen::VectorXd& rs_values,
                                 const Eigen::VectorXd& values,
                                 const RegObjectiveTerms& terms);

// Line-oriented audit format, one tuple per line:
//   <sigma1 id> <sigma2 id> <length> <g_hat...> <y1> <y2>
void WritePreferenceDataset(std::ostream& out,
                            const std::vector<PreferenceTuple>& dataset);

struct PreferenceRecord {
  std::uint64_t sigma1_id = 0;
  std::uint64_t sigma2_id = 0;
  int length = 0;
  Eigen::VectorXd g_hat;
  PreferenceLabel y;
};
std::vector<PreferenceRecord> ReadPreferenceDataset(std::istream& in,
                                                    int goal_dim);

}  // namespace piper

#endif  // PIPER_PREFERENCE_H_
