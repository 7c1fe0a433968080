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

#include "piper/oracles.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <sstream>

#include "piper/hierarchy.h"
#include "piper/preference.h"

namespace piper {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

int RandomInt(Rng& rng, int low, int high) {
  return low + static_cast<int>(
                   rng.UniformInt(static_cast<std::uint64_t>(high - low + 1)));
}

MatrixXd RandomMatrix(Index rows, Index cols, Rng& rng, double scale = 1.0) {
  MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = scale * rng.Normal();
  }
  return m;
}

// Weighted squared error plus a smooth cross-output term, so output
// gradients differ per coordinate.
BatchLoss RandomLoss(Index outputs, Index batch, Rng& rng) {
  MatrixXd targets = RandomMatrix(outputs, batch, rng);
  MatrixXd weights(outputs, batch);
  for (Index j = 0; j < batch; ++j) {
    for (Index i = 0; i < outputs; ++i) weights(i, j) = rng.Uniform(0.5, 2.0);
  }
  return [targets, weights](const MatrixXd& y, MatrixXd* grad) {
    const double inv = 1.0 / static_cast<double>(y.cols());
    const MatrixXd diff = y - targets;
    const VectorXd column_sum = y.colwise().sum().transpose();
    double loss = 0.5 * inv * (weights.array() * diff.array().square()).sum();
    loss += inv * column_sum.array().sin().sum();
    if (grad != nullptr) {
      *grad = inv * (weights.array() * diff.array()).matrix();
      grad->rowwise() += inv * column_sum.array().cos().matrix().transpose();
    }
    return loss;
  };
}

double LogSumExp(const VectorXd& v) {
  const double max = v.maxCoeff();
  return max + std::log((v.array() - max).exp().sum());
}

VectorXd RandomSimplex(Index n, Rng& rng) {
  VectorXd p(n);
  for (Index i = 0; i < n; ++i) p[i] = -std::log(1.0 - rng.Uniform());
  return p / p.sum();
}

std::string Describe(const OracleReport& r) {
  std::ostringstream out;
  out.precision(3);
  out << r.instances << " instances, worst " << std::scientific << r.metric
      << " vs " << r.tolerance;
  return out.str();
}

}  // namespace

// ----------------------------------------------------------------- gradients

VectorXd FiniteDifferenceGradient(const ParamVector& params,
                                  const NetSpec& spec, const MatrixXd& inputs,
                                  const BatchLoss& loss, double step) {
  VectorXd numeric(params.size());
  ParamVector probe = params;
  for (Index i = 0; i < params.size(); ++i) {
    probe[i] = params[i] + step;
    const double plus = loss(NetForwardBatch(probe, spec, inputs), nullptr);
    probe[i] = params[i] - step;
    const double minus = loss(NetForwardBatch(probe, spec, inputs), nullptr);
    probe[i] = params[i];
    numeric[i] = (plus - minus) / (2.0 * step);
  }
  return numeric;
}

double MaxRelativeError(const VectorXd& analytic, const VectorXd& numeric,
                        double floor) {
  double worst = 0.0;
  for (Index i = 0; i < analytic.size(); ++i) {
    const double err = std::abs(analytic[i] - numeric[i]);
    if (err <= floor) continue;
    const double scale = std::max(std::abs(analytic[i]), std::abs(numeric[i]));
    worst = std::max(worst, err / scale);
  }
  return worst;
}

OracleReport RunGradientOracle(const GradientOracleOptions& options) {
  Stopwatch watch;
  OracleReport report;
  report.name = "gradient";
  report.tolerance = options.tolerance;
  Rng rng = Rng::Stream(options.seed, "gradient-oracle");
  double max_abs_error = 0.0;
  double max_gradient = 0.0;
  Index largest = 0;
  while (report.instances < options.networks) {
    const int input = RandomInt(rng, 1, 6);
    const int hidden = RandomInt(rng, 1, 3);
    const int output = RandomInt(rng, 1, 3);
    std::vector<int> sizes = {input};
    for (int l = 0; l < hidden; ++l) sizes.push_back(RandomInt(rng, 2, 64));
    sizes.push_back(output);
    NetSpec spec;
    spec.layer_sizes = sizes;
    spec.hidden_activation =
        rng.Uniform() < 0.5 ? Activation::kTanh : Activation::kIdentity;
    spec.output_activation =
        rng.Uniform() < 0.5 ? Activation::kTanh : Activation::kIdentity;
    if (spec.ParamCount() > options.max_params) continue;

    ParamVector params = InitParams(spec, rng);
    params += RandomMatrix(params.size(), 1, rng, 0.1);
    const Index batch = RandomInt(rng, 1, 8);
    const MatrixXd inputs = RandomMatrix(input, batch, rng);
    const BatchLoss loss = RandomLoss(output, batch, rng);

    const VectorXd analytic = NetGradient(params, spec, inputs, loss);
    const VectorXd numeric =
        FiniteDifferenceGradient(params, spec, inputs, loss, options.step);
    report.metric = std::max(report.metric,
                             MaxRelativeError(analytic, numeric, options.floor));
    max_abs_error =
        std::max(max_abs_error, (analytic - numeric).cwiseAbs().maxCoeff());
    max_gradient = std::max(max_gradient, analytic.cwiseAbs().maxCoeff());
    largest = std::max(largest, spec.ParamCount());
    ++report.instances;
  }
  report.passed = report.metric <= options.tolerance;
  report.seconds = watch.Seconds();
  std::ostringstream detail;
  detail.precision(3);
  detail << Describe(report) << "; max abs error " << max_abs_error
         << ", max |gradient| " << max_gradient << ", largest network "
         << largest << " parameters";
  report.detail = detail.str();
  return report;
}

// ---------------------------------------------------------------- densities

VectorXd ExponentiatedGradientMaximizer(const VectorXd& rs_values,
                                        const VectorXd& reg_policy,
                                        double beta, int iterations,
                                        double step_scale) {
  const Index n = rs_values.size();
  const double eta = step_scale / beta;
  const VectorXd log_reg = reg_policy.array().log();
  // Iterate in log space; the uniform start has log pi = -log n.
  VectorXd log_pi = VectorXd::Constant(n, -std::log(static_cast<double>(n)));
  for (int it = 0; it < iterations; ++it) {
    const VectorXd grad =
        rs_values - beta * (log_pi - log_reg + VectorXd::Ones(n));
    log_pi += eta * grad;
    log_pi.array() -= LogSumExp(log_pi);
  }
  return log_pi.array().exp();
}

double TotalVariation(const VectorXd& p, const VectorXd& q) {
  return 0.5 * (p - q).cwiseAbs().sum();
}

OracleReport RunDerivationOracle(const DerivationOracleOptions& options) {
  Stopwatch watch;
  OracleReport report;
  report.name = "derivation";
  report.tolerance = options.tolerance;
  double worst_identity = 0.0;
  Rng rng = Rng::Stream(options.seed, "derivation-oracle");
  for (int instance = 0; instance < options.instances; ++instance) {
    const int n = RandomInt(rng, 2, options.max_candidates);
    VectorXd rs(n);
    VectorXd values(n);
    const bool sparse = rng.Uniform() < 0.5;
    for (int i = 0; i < n; ++i) {
      rs[i] = sparse ? -static_cast<double>(rng.UniformInt(7)) : rng.Normal();
      values[i] = -20.0 * rng.Uniform();
    }
    const double choice = rng.Uniform();
    const double alpha =
        choice < 0.2 ? 0.0 : (choice < 0.4 ? 1e-5 : rng.Uniform(0.0, 2.0));
    const double beta = rng.Uniform(0.05, 3.0);

    const RegPolicyDistribution reg =
        RegPolicyFromValues(values, alpha, beta);
    const SubgoalDistribution optimum =
        OptimalHighDensity(rs, values, alpha, beta);
    const VectorXd eg = ExponentiatedGradientMaximizer(
        rs, reg.probabilities, beta, options.iterations);
    report.metric =
        std::max(report.metric, TotalVariation(eg, optimum.probabilities));

    const VectorXd pi = RandomSimplex(n, rng);
    const RegObjectiveTerms terms =
        ComputeRegObjectiveTerms(pi, reg, alpha, beta);
    const double j_kl = KlRegularizedObjective(pi, rs, reg, beta);
    const double j_value = ValueRegularizedObjective(pi, rs, values, terms);
    worst_identity = std::max(worst_identity, std::abs(j_kl - j_value) /
                                                  std::max(1.0, std::abs(j_kl)));
    ++report.instances;
  }
  report.passed = report.metric <= options.tolerance &&
                  worst_identity <= options.identity_tolerance;
  report.seconds = watch.Seconds();
  std::ostringstream detail;
  detail.precision(3);
  detail << Describe(report) << "; objective identity worst " << std::scientific
         << worst_identity << " vs " << options.identity_tolerance;
  report.detail = detail.str();
  return report;
}

// ------------------------------------------------------------ Bradley-Terry

std::vector<OracleReport> RunBtOracle(const BtOracleOptions& options) {
  Stopwatch watch;
  OracleReport value;
  value.name = "bt-value";
  value.tolerance = options.value_tolerance;
  value.instances = 1;
  constexpr double kExpected = 0.95257412682243321912;  // 1 / (1 + e^-3)
  value.metric = std::abs(BtProbabilityFromSums(0.0, -3.0) - kExpected);
  value.passed = value.metric <= value.tolerance;
  value.detail = Describe(value);

  OracleReport symmetry;
  symmetry.name = "bt-symmetry";
  symmetry.tolerance = options.symmetry_tolerance;
  Rng rng = Rng::Stream(options.seed, "bt-oracle");
  for (int i = 0; i < options.symmetry_cases; ++i) {
    const double scale = std::pow(10.0, rng.Uniform(-2.0, 2.0));
    const double s1 = scale * rng.Normal();
    const double s2 = scale * rng.Normal();
    const double total =
        BtProbabilityFromSums(s1, s2) + BtProbabilityFromSums(s2, s1);
    symmetry.metric = std::max(symmetry.metric, std::abs(total - 1.0));
    ++symmetry.instances;
  }
  symmetry.passed = symmetry.metric <= symmetry.tolerance;
  symmetry.detail = Describe(symmetry);
  value.seconds = symmetry.seconds = watch.Seconds();
  return {value, symmetry};
}

// ----------------------------------------------------------- reward recovery

namespace {

struct Triple {
  VectorXd s, g, u;
};

double HiddenReward(const Triple& t) {
  return -(t.u - t.g).norm() - 0.5 * (t.u - t.s).norm();
}

Triple RandomTriple(const VectorXd& g, Rng& rng) {
  Triple t;
  t.s = VectorXd(2);
  t.u = VectorXd(2);
  for (int i = 0; i < 2; ++i) {
    t.s[i] = rng.Uniform(-1.0, 1.0);
    t.u[i] = rng.Uniform(-1.0, 1.0);
  }
  t.g = g;
  return t;
}

std::shared_ptr<const HighTrajectory> AsTrajectory(const Triple& t,
                                                   std::uint64_t id) {
  auto sigma = std::make_shared<HighTrajectory>();
  sigma->id = id;
  sigma->states = {t.s};
  sigma->subgoals = {t.u};
  sigma->achieved_tail = {t.s};
  sigma->g_star = t.g;
  return sigma;
}

// Pairs share a goal; returns whether a strict preference exists.
bool RandomPair(Rng& rng, Triple* a, Triple* b) {
  VectorXd g(2);
  g << rng.Uniform(-1.0, 1.0), rng.Uniform(-1.0, 1.0);
  *a = RandomTriple(g, rng);
  *b = RandomTriple(g, rng);
  return std::abs(HiddenReward(*a) - HiddenReward(*b)) > 1e-12;
}

}  // namespace

OracleReport RunRewardRecovery(const RewardRecoveryOptions& options) {
  Stopwatch watch;
  OracleReport report;
  report.name = "reward-recovery";
  report.tolerance = options.min_accuracy;
  Rng data_rng = Rng::Stream(options.seed, "recovery-data");
  Rng init_rng = Rng::Stream(options.seed, "recovery-init");
  Rng train_rng = Rng::Stream(options.seed, "recovery-train");

  std::vector<PreferenceTuple> dataset;
  std::uint64_t id = 0;
  while (static_cast<int>(dataset.size()) < options.train_pairs) {
    Triple a, b;
    if (!RandomPair(data_rng, &a, &b)) continue;
    PreferenceTuple tuple;
    tuple.sigma1 = AsTrajectory(a, id++);
    tuple.sigma2 = AsTrajectory(b, id++);
    tuple.length = 1;
    tuple.g_hat = a.g;
    tuple.y = LabelFromReturns(HiddenReward(a), HiddenReward(b), 0.0);
    dataset.push_back(std::move(tuple));
  }

  RewardModel model =
      RewardModel::Create(2, 2, 2, options.width, options.hidden_layers,
                          options.learning_rate, init_rng);
  model.spec.output_activation = options.output_activation;
  for (int step = 0; step < options.steps; ++step) {
    TrainRewardModelStep(model, dataset, options.batch_size, train_rng);
  }

  int correct = 0;
  int counted = 0;
  while (counted < options.test_pairs) {
    Triple a, b;
    if (!RandomPair(data_rng, &a, &b)) continue;
    MatrixXd states(2, 2), goals(2, 2), subgoals(2, 2);
    states << a.s, b.s;
    goals << a.g, b.g;
    subgoals << a.u, b.u;
    const VectorXd predicted = model.Rewards(model.phi, states, goals, subgoals);
    const bool truth = HiddenReward(a) > HiddenReward(b);
    correct += ((predicted[0] > predicted[1]) == truth) ? 1 : 0;
    ++counted;
  }
  report.instances = counted;
  report.metric = static_cast<double>(correct) / counted;
  report.passed = report.metric >= options.min_accuracy;
  report.seconds = watch.Seconds();
  std::ostringstream detail;
  detail << "held-out accuracy " << report.metric << " over " << counted
         << " pairs after " << options.steps << " steps (min "
         << options.min_accuracy << ")";
  report.detail = detail.str();
  return report;
}

}  // namespace piper
