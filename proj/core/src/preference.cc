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

#include "piper/preference.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "piper/environments.h"
#include "piper/errors.h"

namespace piper {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

int ResolveLength(const HighTrajectory& sigma, int n) {
  if (n < 0) return sigma.size();
  PIPER_CHECK(n <= sigma.size(), "length exceeds trajectory size");
  return n;
}

// log(1 + exp(x)) without overflow.
double Softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double LogSumExp(const VectorXd& logits) {
  const double max = logits.maxCoeff();
  return max + std::log((logits.array() - max).exp().sum());
}

}  // namespace

bool PreferenceLabel::IsValid() const {
  return (first == 1.0 && second == 0.0) || (first == 0.0 && second == 1.0) ||
         (first == 0.5 && second == 0.5);
}

// -------------------------------------------------------------- RewardModel

RewardModel RewardModel::Create(int state_dim, int goal_dim, int subgoal_dim,
                                int width, int hidden_layers,
                                double learning_rate, Rng& init_rng) {
  RewardModel model;
  model.state_dim = state_dim;
  model.goal_dim = goal_dim;
  model.subgoal_dim = subgoal_dim;
  const int input = state_dim + goal_dim + subgoal_dim;
  model.spec = MakeMlpSpec(input, width, hidden_layers, 1, Activation::kTanh,
                           Activation::kTanh);
  model.phi = InitParams(model.spec, init_rng);
  model.phi_target = model.phi;
  model.adam = AdamState::ForSize(model.phi.size(), learning_rate);
  model.input_center = VectorXd::Zero(input);
  model.input_half_range = VectorXd::Ones(input);
  return model;
}

MatrixXd RewardModel::Input(const MatrixXd& states, const MatrixXd& goals,
                            const MatrixXd& subgoals) const {
  PIPER_CHECK(states.rows() == state_dim && goals.rows() == goal_dim &&
                  subgoals.rows() == subgoal_dim,
              "reward model input dimension mismatch");
  PIPER_CHECK(states.cols() == goals.cols() && goals.cols() == subgoals.cols(),
              "reward model batch mismatch");
  MatrixXd input(state_dim + goal_dim + subgoal_dim, states.cols());
  input << states, goals, subgoals;
  input.colwise() -= input_center;
  input.array().colwise() /= input_half_range.array();
  return input;
}

VectorXd RewardModel::Rewards(const ParamVector& params,
                              const MatrixXd& states, const MatrixXd& goals,
                              const MatrixXd& subgoals) const {
  return NetForwardBatch(params, spec, Input(states, goals, subgoals))
      .row(0)
      .transpose();
}

// ------------------------------------------------------- returns and labels

double PilReturn(const HighTrajectory& sigma, const VectorXd& g,
                 double epsilon, int n) {
  n = ResolveLength(sigma, n);
  PIPER_CHECK(n > 0, "pil_return: empty trajectory");
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    total += SparseGoalReward(sigma.achieved_tail[static_cast<std::size_t>(i)],
                              g, epsilon);
  }
  return total;
}

double LowerValue(const SacAgent& low, const VectorXd& s, const VectorXd& g,
                  Rng* rng) {
  return StateValues(low, s, g, rng)[0];
}

VectorXd LowerValues(const SacAgent& low, const HighTrajectory& sigma, int n) {
  n = ResolveLength(sigma, n);
  if (n == 0) return {};
  MatrixXd states(low.dims.state_dim, n);
  MatrixXd goals(low.dims.goal_dim, n);
  for (int i = 0; i < n; ++i) {
    states.col(i) = sigma.states[static_cast<std::size_t>(i)];
    goals.col(i) = sigma.subgoals[static_cast<std::size_t>(i)];
  }
  return StateValues(low, states, goals, nullptr);
}

double RegularizedReturn(const HighTrajectory& sigma, const VectorXd& g,
                         double epsilon, double alpha, const SacAgent& low,
                         int n) {
  n = ResolveLength(sigma, n);
  double total = PilReturn(sigma, g, epsilon, n);
  if (alpha != 0.0) total += alpha * LowerValues(low, sigma, n).sum();
  return total;
}

std::vector<VectorXd> HindsightCandidates(const HighTrajectory& sigma1,
                                          const HighTrajectory& sigma2,
                                          int n) {
  if (n < 0) n = std::min(sigma1.size(), sigma2.size());
  PIPER_CHECK(n <= sigma1.size() && n <= sigma2.size(),
              "length exceeds trajectory size");
  std::vector<VectorXd> candidates;
  // Entry i's state is the end state of segment i - 1.
  for (const HighTrajectory* sigma : {&sigma1, &sigma2}) {
    for (int i = 1; i < n; ++i) {
      candidates.push_back(sigma->achieved_tail[static_cast<std::size_t>(i - 1)]);
    }
  }
  return candidates;
}

std::vector<VectorXd> SampleHindsightGoals(const HighTrajectory& sigma1,
                                           const HighTrajectory& sigma2,
                                           int count, Rng& rng, int n) {
  const std::vector<VectorXd> candidates =
      HindsightCandidates(sigma1, sigma2, n);
  if (candidates.empty()) return {sigma1.g_star};
  std::vector<VectorXd> goals;
  goals.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) {
    goals.push_back(candidates[rng.UniformInt(candidates.size())]);
  }
  return goals;
}

PreferenceLabel LabelFromReturns(double return1, double return2,
                                 double tie_tol) {
  const double diff = return1 - return2;
  if (std::abs(diff) <= tie_tol) return PreferenceLabel::Tie();
  return diff > 0.0 ? PreferenceLabel::FirstPreferred()
                    : PreferenceLabel::SecondPreferred();
}

PreferenceLabel MakeLabel(const HighTrajectory& sigma1,
                          const HighTrajectory& sigma2, const VectorXd& g_hat,
                          double epsilon, double alpha, const SacAgent& low,
                          double tie_tol) {
  PIPER_CHECK(sigma1.size() == sigma2.size(),
              "make_label: trajectories must be paired at equal length");
  return LabelFromReturns(
      RegularizedReturn(sigma1, g_hat, epsilon, alpha, low),
      RegularizedReturn(sigma2, g_hat, epsilon, alpha, low), tie_tol);
}

// ------------------------------------------------------------ Bradley-Terry

double BtProbabilityFromSums(double s1, double s2) {
  const double diff = s1 - s2;
  if (diff >= 0.0) return 1.0 / (1.0 + std::exp(-diff));
  const double e = std::exp(diff);
  return e / (1.0 + e);
}

namespace {

// Inputs for every entry of both trajectories of every tuple, plus the
// column ranges of each tuple's two halves.
struct ScoredBatch {
  MatrixXd input;
  std::vector<Index> begin;  // column of the first sigma1 entry of tuple i
};

ScoredBatch BuildScoredBatch(const RewardModel& model,
                             const std::vector<PreferenceTuple>& batch) {
  Index columns = 0;
  for (const PreferenceTuple& tuple : batch) {
    PIPER_CHECK(tuple.length > 0 && tuple.length <= tuple.sigma1->size() &&
                    tuple.length <= tuple.sigma2->size(),
                "preference tuple length out of range");
    columns += 2 * tuple.length;
  }
  MatrixXd states(model.state_dim, columns);
  MatrixXd goals(model.goal_dim, columns);
  MatrixXd subgoals(model.subgoal_dim, columns);
  ScoredBatch scored;
  Index c = 0;
  for (const PreferenceTuple& tuple : batch) {
    scored.begin.push_back(c);
    for (const HighTrajectory* sigma : {tuple.sigma1.get(), tuple.sigma2.get()}) {
      for (int i = 0; i < tuple.length; ++i, ++c) {
        states.col(c) = sigma->states[static_cast<std::size_t>(i)];
        goals.col(c) = tuple.g_hat;
        subgoals.col(c) = sigma->subgoals[static_cast<std::size_t>(i)];
      }
    }
  }
  scored.input = model.Input(states, goals, subgoals);
  return scored;
}

}  // namespace

double BtProbability(const RewardModel& model, const HighTrajectory& sigma1,
                     const HighTrajectory& sigma2, const VectorXd& g) {
  PIPER_CHECK(sigma1.size() == sigma2.size(),
              "bt_probability: trajectories must have equal length");
  PreferenceTuple tuple;
  tuple.sigma1 = std::shared_ptr<const HighTrajectory>(&sigma1, [](auto*) {});
  tuple.sigma2 = std::shared_ptr<const HighTrajectory>(&sigma2, [](auto*) {});
  tuple.length = sigma1.size();
  tuple.g_hat = g;
  const ScoredBatch scored = BuildScoredBatch(model, {tuple});
  const VectorXd rewards =
      NetForwardBatch(model.phi, model.spec, scored.input).row(0).transpose();
  const int n = tuple.length;
  return BtProbabilityFromSums(rewards.head(n).sum(), rewards.tail(n).sum());
}

double RewardModelLoss(const RewardModel& model,
                       const std::vector<PreferenceTuple>& batch,
                       VectorXd* grad) {
  PIPER_CHECK(!batch.empty(), "reward_model_loss: empty batch");
  const ScoredBatch scored = BuildScoredBatch(model, batch);
  ForwardCache cache;
  const MatrixXd rewards = NetForwardBatch(
      model.phi, model.spec, scored.input, grad != nullptr ? &cache : nullptr);
  MatrixXd output_grad;
  if (grad != nullptr) output_grad = MatrixXd::Zero(1, rewards.cols());

  const double scale = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const PreferenceTuple& tuple = batch[i];
    const Index begin = scored.begin[i];
    const int n = tuple.length;
    const double diff = rewards.block(0, begin, 1, n).sum() -
                        rewards.block(0, begin + n, 1, n).sum();
    // log p = -softplus(-diff), log(1 - p) = -softplus(diff).
    const double log_p = -Softplus(-diff);
    const double log_q = -Softplus(diff);
    const bool p_floor = log_p < kMinLogProbability;
    const bool q_floor = log_q < kMinLogProbability;
    total -= tuple.y.first * std::max(log_p, kMinLogProbability) +
             tuple.y.second * std::max(log_q, kMinLogProbability);
    if (grad == nullptr) continue;
    const double p = BtProbabilityFromSums(diff, 0.0);
    const double dloss_ddiff =
        -(tuple.y.first * (p_floor ? 0.0 : 1.0 - p) -
          tuple.y.second * (q_floor ? 0.0 : p));
    output_grad.block(0, begin, 1, n).setConstant(scale * dloss_ddiff);
    output_grad.block(0, begin + n, 1, n).setConstant(-scale * dloss_ddiff);
  }
  if (grad != nullptr) {
    NetBackward(model.phi, model.spec, cache, output_grad, grad, nullptr);
  }
  return total * scale;
}

RewardTrainResult TrainRewardModelStep(
    RewardModel& model, const std::vector<PreferenceTuple>& dataset,
    int batch_size, Rng& rng) {
  if (dataset.empty() || batch_size <= 0) return {0.0, true};
  std::vector<PreferenceTuple> batch;
  batch.reserve(static_cast<std::size_t>(batch_size));
  for (int i = 0; i < batch_size; ++i) {
    batch.push_back(dataset[rng.UniformInt(dataset.size())]);
  }
  VectorXd grad;
  const double loss = RewardModelLoss(model, batch, &grad);
  ClipByGlobalNorm(grad, kGradClipNorm);
  AdamStep(model.phi, grad, model.adam);
  return {loss, false};
}

void SoftUpdateRewardTarget(RewardModel& model, double tau) {
  model.phi_target = PolyakUpdate(model.phi_target, model.phi, tau);
}

std::vector<HighTransition> RelabelHighBatch(
    const std::vector<HighTransition>& batch, const RewardModel& model,
    const ParamVector& params) {
  std::vector<HighTransition> out = batch;
  if (batch.empty()) return out;
  const auto n = static_cast<Index>(batch.size());
  MatrixXd states(model.state_dim, n);
  MatrixXd goals(model.goal_dim, n);
  MatrixXd subgoals(model.subgoal_dim, n);
  for (Index c = 0; c < n; ++c) {
    const HighTransition& tr = batch[static_cast<std::size_t>(c)];
    states.col(c) = tr.s;
    goals.col(c) = tr.g_star;
    subgoals.col(c) = tr.g_t;
  }
  const VectorXd rewards = model.Rewards(params, states, goals, subgoals);
  for (Index c = 0; c < n; ++c) out[static_cast<std::size_t>(c)].r_sum = rewards[c];
  return out;
}

// ---------------------------------------------------------------- densities

RegPolicyDistribution RegPolicyFromValues(const VectorXd& values, double alpha,
                                          double beta,
                                          std::vector<VectorXd> candidates) {
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  PIPER_CHECK(values.size() > 0, "reg_policy_density: no candidates");
  PIPER_CHECK(candidates.empty() ||
                  static_cast<Index>(candidates.size()) == values.size(),
              "candidate count mismatch");
  RegPolicyDistribution dist;
  dist.m = alpha / beta;
  const VectorXd logits = dist.m * values;
  dist.log_normalizer = LogSumExp(logits);
  dist.normalizer = std::exp(dist.log_normalizer);
  dist.probabilities = (logits.array() - dist.log_normalizer).exp();
  dist.candidates = std::move(candidates);
  return dist;
}

RegPolicyDistribution RegPolicyDensity(const SacAgent& low, const VectorXd& s,
                                       const std::vector<VectorXd>& candidates,
                                       double alpha, double beta) {
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  PIPER_CHECK(!candidates.empty(), "reg_policy_density: no candidates");
  const auto n = static_cast<Index>(candidates.size());
  MatrixXd states(low.dims.state_dim, n);
  MatrixXd goals(low.dims.goal_dim, n);
  for (Index i = 0; i < n; ++i) {
    states.col(i) = s;
    goals.col(i) = candidates[static_cast<std::size_t>(i)];
  }
  return RegPolicyFromValues(StateValues(low, states, goals, nullptr), alpha,
                             beta, candidates);
}

SubgoalDistribution OptimalHighDensity(const VectorXd& rs_values,
                                       const VectorXd& values, double alpha,
                                       double beta,
                                       std::vector<VectorXd> candidates) {
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  PIPER_CHECK(rs_values.size() == values.size() && values.size() > 0,
              "optimal_high_density: length mismatch");
  PIPER_CHECK(candidates.empty() ||
                  static_cast<Index>(candidates.size()) == values.size(),
              "candidate count mismatch");
  SubgoalDistribution dist;
  const VectorXd logits = (rs_values + alpha * values) / beta;
  dist.log_normalizer = LogSumExp(logits);
  dist.normalizer = std::exp(dist.log_normalizer);
  dist.probabilities = (logits.array() - dist.log_normalizer).exp();
  dist.candidates = std::move(candidates);
  return dist;
}

namespace {

// sum pi log pi with 0 log 0 = 0.
double NegEntropy(const VectorXd& policy) {
  double total = 0.0;
  for (Index i = 0; i < policy.size(); ++i) {
    if (policy[i] > 0.0) total += policy[i] * std::log(policy[i]);
  }
  return total;
}

}  // namespace

RegObjectiveTerms ComputeRegObjectiveTerms(const VectorXd& policy,
                                           const RegPolicyDistribution& reg,
                                           double alpha, double beta) {
  RegObjectiveTerms terms;
  terms.alpha = alpha;
  terms.beta = beta;
  terms.entropy = -NegEntropy(policy);
  terms.m_hat = beta * terms.entropy - beta * reg.log_normalizer;
  return terms;
}

double KlRegularizedObjective(const VectorXd& policy, const VectorXd& rs_values,
                              const RegPolicyDistribution& reg, double beta) {
  PIPER_CHECK(policy.size() == rs_values.size() &&
                  policy.size() == reg.probabilities.size(),
              "objective: length mismatch");
  double kl = 0.0;
  for (Index i = 0; i < policy.size(); ++i) {
    if (policy[i] > 0.0) {
      kl += policy[i] * (std::log(policy[i]) - std::log(reg.probabilities[i]));
    }
  }
  return policy.dot(rs_values) - beta * kl;
}

double ValueRegularizedObjective(const VectorXd& policy,
                                 const VectorXd& rs_values,
                                 const VectorXd& values,
                                 const RegObjectiveTerms& terms) {
  return policy.dot(rs_values + terms.alpha * values) + terms.m_hat;
}

// ------------------------------------------------------------ dataset audit

void WritePreferenceDataset(std::ostream& out,
                            const std::vector<PreferenceTuple>& dataset) {
  std::ostringstream line;
  line.precision(17);
  for (const PreferenceTuple& tuple : dataset) {
    line.str("");
    line << tuple.sigma1->id << ' ' << tuple.sigma2->id << ' ' << tuple.length;
    for (Index i = 0; i < tuple.g_hat.size(); ++i) line << ' ' << tuple.g_hat[i];
    line << ' ' << tuple.y.first << ' ' << tuple.y.second << '\n';
    out << line.str();
  }
}

std::vector<PreferenceRecord> ReadPreferenceDataset(std::istream& in,
                                                    int goal_dim) {
  std::vector<PreferenceRecord> records;
  std::string text;
  int line_number = 0;
  while (std::getline(in, text)) {
    ++line_number;
    if (text.empty()) continue;
    std::istringstream line(text);
    PreferenceRecord record;
    record.g_hat.resize(goal_dim);
    line >> record.sigma1_id >> record.sigma2_id >> record.length;
    for (int i = 0; i < goal_dim; ++i) line >> record.g_hat[i];
    line >> record.y.first >> record.y.second;
    if (line.fail() || !record.y.IsValid()) {
      throw IoError("preference dataset: malformed line " +
                    std::to_string(line_number));
    }
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace piper
