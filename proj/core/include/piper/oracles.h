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

#ifndef PIPER_ORACLES_H_
#define PIPER_ORACLES_H_

// Self-checks with independent references: finite differences for network
// gradients, exponentiated-gradient ascent for the optimal subgoal density,
// closed-form logistic values for Bradley-Terry, and a synthetic
// reward-recovery experiment.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "piper/diffmath.h"
#include "piper/rng.h"

namespace piper {

struct OracleReport {
  std::string name;
  bool passed = false;
  double metric = 0.0;     // worst observed error, or accuracy
  double tolerance = 0.0;  // bound the metric is compared against
  int instances = 0;
  double seconds = 0.0;
  std::string detail;
};

// Central differences of `loss` over every parameter coordinate.
Eigen::VectorXd FiniteDifferenceGradient(const ParamVector& params,
                                         const NetSpec& spec,
                                         const Eigen::MatrixXd& inputs,
                                         const BatchLoss& loss,
                                         double step = 1e-5);

// Per-coordinate error with an absolute floor: coordinates whose absolute
// error is within `floor` count as zero error; the rest are measured
// relative to max(|analytic|, |numeric|).
double MaxRelativeError(const Eigen::VectorXd& analytic,
                        const Eigen::VectorXd& numeric, double floor = 1e-8);

struct GradientOracleOptions {
  int networks = 50;
  Eigen::Index max_params = 10000;
  double step = 1e-5;
  double tolerance = 1e-4;
  double floor = 1e-8;
  std::uint64_t seed = 7;
};
OracleReport RunGradientOracle(const GradientOracleOptions& options = {});

// Maximizes sum pi r - beta KL(pi || pi_reg) over the simplex by
// exponentiated-gradient ascent from the uniform distribution.
Eigen::VectorXd ExponentiatedGradientMaximizer(const Eigen::VectorXd& rs_values,
                                               const Eigen::VectorXd& reg_policy,
                                               double beta, int iterations,
                                               double step_scale = 0.3);

double TotalVariation(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

struct DerivationOracleOptions {
  int instances = 200;
  int max_candidates = 64;
  int iterations = 400;
  double tolerance = 1e-6;
  // Tolerance on |J_kl - J_value| at random policies.
  double identity_tolerance = 1e-9;
  std::uint64_t seed = 11;
};
OracleReport RunDerivationOracle(const DerivationOracleOptions& options = {});

struct BtOracleOptions {
  int symmetry_cases = 10000;
  double value_tolerance = 1e-9;
  double symmetry_tolerance = 1e-12;
  std::uint64_t seed = 13;
};
// Two reports: the closed-form value at sums (0, -3) and swap symmetry.
std::vector<OracleReport> RunBtOracle(const BtOracleOptions& options = {});

struct RewardRecoveryOptions {
  int train_pairs = 5000;
  int test_pairs = 2000;
  int steps = 2000;
  int batch_size = 64;
  int width = 32;
  int hidden_layers = 2;
  double learning_rate = 3e-3;
  double min_accuracy = 0.95;
  // The production head is tanh; other heads are for diagnostics.
  Activation output_activation = Activation::kTanh;
  std::uint64_t seed = 17;
};
// Labels come from a fixed hidden reward over random 2D (state, goal,
// subgoal) triples; the metric is held-out ordering accuracy.
OracleReport RunRewardRecovery(const RewardRecoveryOptions& options = {});

}  // namespace piper

#endif  // PIPER_ORACLES_H_
