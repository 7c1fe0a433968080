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


#include "piper/diffmath.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "gtest/gtest.h"
#include "piper/errors.h"
#include "piper/rng.h"

namespace piper {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Layer-by-layer evaluation with explicit loops over the flat layout.
VectorXd NaiveForward(const ParamVector& params, const NetSpec& spec,
                      const VectorXd& input) {
  std::vector<double> current(input.data(), input.data() + input.size());
  int offset = 0;
  for (int l = 0; l < spec.num_layers(); ++l) {
    const int in = spec.layer_sizes[l];
    const int out = spec.layer_sizes[l + 1];
    const bool last = l + 1 == spec.num_layers();
    const Activation act =
        last ? spec.output_activation : spec.hidden_activation;
    std::vector<double> next(out, 0.0);
    for (int o = 0; o < out; ++o) {
      double sum = params[offset + in * out + o];
      // Column-major weights: element (o, i) lives at o + i * out.
      for (int i = 0; i < in; ++i) sum += params[offset + o + i * out] * current[i];
      if (act == Activation::kTanh) sum = std::tanh(sum);
      if (act == Activation::kRelu) sum = std::max(sum, 0.0);
      next[o] = sum;
    }
    offset += in * out + out;
    current = std::move(next);
  }
  return Eigen::Map<VectorXd>(current.data(), current.size());
}

TEST(NetForwardTest, ZeroParamsGiveZeroOutput) {
  const NetSpec spec =
      MakeMlpSpec(3, 5, 2, 4, Activation::kRelu, Activation::kIdentity);
  const ParamVector params = ParamVector::Zero(spec.ParamCount());
  const VectorXd out = NetForward(params, spec, VectorXd::Constant(3, 2.5));
  EXPECT_EQ(out, VectorXd::Zero(4));
}

TEST(NetForwardTest, SingleLinearLayerSumsInputs) {
  NetSpec spec;
  spec.layer_sizes = {2, 1};
  spec.output_activation = Activation::kIdentity;
  ParamVector params(3);
  params << 1.0, 1.0, 0.0;
  VectorXd input(2);
  input << 0.3, 0.7;
  EXPECT_DOUBLE_EQ(NetForward(params, spec, input)[0], 1.0);
}

TEST(NetForwardTest, MatchesNaiveEvaluation) {
  Rng rng(17);
  for (Activation hidden : {Activation::kTanh, Activation::kRelu}) {
    const NetSpec spec = MakeMlpSpec(4, 7, 3, 3, hidden, Activation::kTanh);
    ParamVector params = InitParams(spec, rng);
    for (int i = 0; i < params.size(); ++i) params[i] += rng.Uniform(-0.1, 0.1);
    for (int trial = 0; trial < 20; ++trial) {
      VectorXd input(4);
      for (int i = 0; i < 4; ++i) input[i] = rng.Uniform(-2.0, 2.0);
      const VectorXd fast = NetForward(params, spec, input);
      const VectorXd slow = NaiveForward(params, spec, input);
      for (int i = 0; i < 3; ++i) EXPECT_NEAR(fast[i], slow[i], 1e-12);
    }
  }
}

TEST(NetForwardTest, BatchColumnsMatchSingleEvaluations) {
  Rng rng(3);
  const NetSpec spec =
      MakeMlpSpec(2, 6, 2, 2, Activation::kRelu, Activation::kIdentity);
  const ParamVector params = InitParams(spec, rng);
  MatrixXd inputs(2, 5);
  for (int i = 0; i < inputs.size(); ++i) inputs.data()[i] = rng.Normal();
  const MatrixXd batch = NetForwardBatch(params, spec, inputs);
  for (int c = 0; c < 5; ++c) {
    const VectorXd single = NetForward(params, spec, inputs.col(c));
    EXPECT_NEAR((batch.col(c) - single).norm(), 0.0, 1e-14);
  }
}

TEST(NetForwardTest, TanhOutputStaysInsideOpenInterval) {
  Rng rng(5);
  const NetSpec spec =
      MakeMlpSpec(3, 8, 2, 2, Activation::kTanh, Activation::kTanh);
  const ParamVector params = InitParams(spec, rng);
  for (int trial = 0; trial < 1000; ++trial) {
    VectorXd input(3);
    for (int i = 0; i < 3; ++i) input[i] = rng.Uniform(-10.0, 10.0);
    const VectorXd out = NetForward(params, spec, input);
    EXPECT_LT(out.cwiseAbs().maxCoeff(), 1.0);
  }
}

TEST(NetForwardTest, DimensionMismatchIsStructural) {
  const NetSpec spec =
      MakeMlpSpec(3, 4, 1, 1, Activation::kTanh, Activation::kIdentity);
  const ParamVector params = ParamVector::Zero(spec.ParamCount());
  EXPECT_THROW(NetForward(params, spec, VectorXd::Zero(2)), StructuralError);
  EXPECT_THROW(NetForward(ParamVector::Zero(3), spec, VectorXd::Zero(3)),
               StructuralError);
}

TEST(NetSpecTest, RejectsDegenerateLayouts) {
  NetSpec spec;
  spec.layer_sizes = {3};
  EXPECT_THROW(spec.Validate(), StructuralError);
  spec.layer_sizes = {3, 0, 1};
  EXPECT_THROW(spec.Validate(), StructuralError);
  spec.layer_sizes = {3, 4, 1};
  EXPECT_EQ(spec.ParamCount(), 3 * 4 + 4 + 4 * 1 + 1);
}

TEST(InitParamsTest, WeightsWithinGlorotBoundsAndZeroBiases) {
  Rng rng(9);
  const NetSpec spec =
      MakeMlpSpec(5, 10, 1, 3, Activation::kRelu, Activation::kIdentity);
  const ParamVector params = InitParams(spec, rng);
  const double limit1 = std::sqrt(6.0 / 15.0);
  for (int i = 0; i < 50; ++i) EXPECT_LE(std::abs(params[i]), limit1);
  for (int i = 50; i < 60; ++i) EXPECT_EQ(params[i], 0.0);
  const double limit2 = std::sqrt(6.0 / 13.0);
  for (int i = 60; i < 90; ++i) EXPECT_LE(std::abs(params[i]), limit2);
  for (int i = 90; i < 93; ++i) EXPECT_EQ(params[i], 0.0);
  Rng again(9);
  EXPECT_EQ(InitParams(spec, again), params);
}

BatchLoss SquaredError(const MatrixXd& targets) {
  return [targets](const MatrixXd& out, MatrixXd* grad) {
    const MatrixXd diff = out - targets;
    const double n = static_cast<double>(out.cols());
    if (grad != nullptr) *grad = diff / n;
    return 0.5 * diff.squaredNorm() / n;
  };
}

TEST(NetGradientTest, ConstantLossGivesZeroGradient) {
  Rng rng(1);
  const NetSpec spec =
      MakeMlpSpec(3, 4, 2, 2, Activation::kTanh, Activation::kIdentity);
  const ParamVector params = InitParams(spec, rng);
  const MatrixXd inputs = MatrixXd::Random(3, 4);
  const BatchLoss constant = [](const MatrixXd& out, MatrixXd* grad) {
    if (grad != nullptr) *grad = MatrixXd::Zero(out.rows(), out.cols());
    return 3.0;
  };
  double value = 0.0;
  const VectorXd grad = NetGradient(params, spec, inputs, constant, &value);
  EXPECT_EQ(value, 3.0);
  EXPECT_EQ(grad, VectorXd::Zero(params.size()));
}

TEST(NetGradientTest, OneParameterQuadraticMatchesClosedForm) {
  // At b = 0 the loss (w x + b - y)^2 has derivative 2 x (w x - y) in w.
  NetSpec spec;
  spec.layer_sizes = {1, 1};
  spec.output_activation = Activation::kIdentity;
  const double w = 0.7, x = 1.3, y = -0.4;
  ParamVector params(2);
  params << w, 0.0;
  MatrixXd inputs(1, 1);
  inputs << x;
  const BatchLoss loss = [y](const MatrixXd& out, MatrixXd* grad) {
    const double d = out(0, 0) - y;
    if (grad != nullptr) *grad = MatrixXd::Constant(1, 1, 2.0 * d);
    return d * d;
  };
  const VectorXd grad = NetGradient(params, spec, inputs, loss);
  EXPECT_NEAR(grad[0], 2.0 * x * (w * x - y), 1e-15);
  EXPECT_NEAR(grad[1], 2.0 * (w * x - y), 1e-15);
}

TEST(NetGradientTest, MatchesCentralFiniteDifferences) {
  Rng rng(23);
  for (Activation output : {Activation::kIdentity, Activation::kTanh}) {
    const NetSpec spec =
        MakeMlpSpec(3, 6, 2, 2, Activation::kTanh, output);
    const ParamVector params = InitParams(spec, rng);
    MatrixXd inputs(3, 5);
    MatrixXd targets(2, 5);
    for (int i = 0; i < inputs.size(); ++i) inputs.data()[i] = rng.Normal();
    for (int i = 0; i < targets.size(); ++i) targets.data()[i] = rng.Normal();
    const BatchLoss loss = SquaredError(targets);
    const VectorXd grad = NetGradient(params, spec, inputs, loss);
    const double h = 1e-5;
    for (int i = 0; i < params.size(); ++i) {
      ParamVector plus = params, minus = params;
      plus[i] += h;
      minus[i] -= h;
      const double fd = (loss(NetForwardBatch(plus, spec, inputs), nullptr) -
                         loss(NetForwardBatch(minus, spec, inputs), nullptr)) /
                        (2.0 * h);
      const double err = std::abs(fd - grad[i]);
      if (err <= 1e-8) continue;
      EXPECT_LE(err / std::max(std::abs(fd), std::abs(grad[i])), 1e-4)
          << "coordinate " << i;
    }
  }
}

TEST(NetBackwardTest, InputGradientMatchesFiniteDifferences) {
  Rng rng(4);
  const NetSpec spec =
      MakeMlpSpec(3, 5, 1, 1, Activation::kTanh, Activation::kIdentity);
  const ParamVector params = InitParams(spec, rng);
  VectorXd input(3);
  input << 0.2, -0.5, 0.9;
  ForwardCache cache;
  NetForwardBatch(params, spec, input, &cache);
  MatrixXd input_grad;
  NetBackward(params, spec, cache, MatrixXd::Ones(1, 1), nullptr, &input_grad);
  const double h = 1e-6;
  for (int i = 0; i < 3; ++i) {
    VectorXd plus = input, minus = input;
    plus[i] += h;
    minus[i] -= h;
    const double fd = (NetForward(params, spec, plus)[0] -
                       NetForward(params, spec, minus)[0]) /
                      (2.0 * h);
    EXPECT_NEAR(input_grad(i, 0), fd, 1e-8);
  }
}

TEST(AdamTest, ZeroGradientLeavesParamsAndDecaysMoments) {
  ParamVector params(3);
  params << 1.0, -2.0, 0.5;
  AdamState state = AdamState::ForSize(3, 1e-3);
  state.first_moment << 0.4, 0.4, 0.4;
  state.second_moment << 0.2, 0.2, 0.2;
  AdamState fresh = AdamState::ForSize(3, 1e-3);
  const ParamVector before = params;
  AdamStep(params, VectorXd::Zero(3), fresh);
  EXPECT_EQ(params, before);
  EXPECT_EQ(fresh.step_count, 1);
  ParamVector moved = before;
  AdamStep(moved, VectorXd::Zero(3), state);
  EXPECT_NEAR(state.first_moment[0], 0.9 * 0.4, 1e-15);
  EXPECT_NEAR(state.second_moment[0], 0.999 * 0.2, 1e-15);
}

TEST(AdamTest, FirstStepIsSignedLearningRate) {
  ParamVector params = ParamVector::Zero(3);
  VectorXd grad(3);
  grad << 0.5, -3.0, 1e-3;
  AdamState state = AdamState::ForSize(3, 0.01);
  AdamStep(params, grad, state);
  for (int i = 0; i < 3; ++i) {
    const double expected = -0.01 * grad[i] / (std::abs(grad[i]) + 1e-8);
    EXPECT_NEAR(params[i], expected, 1e-15);
  }
}

TEST(AdamTest, TwoStepsMatchScalarReimplementation) {
  const double lr = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  ParamVector params(2);
  params << 0.3, -0.8;
  AdamState state = AdamState::ForSize(2, lr);
  VectorXd grad(2);
  grad << 0.25, -1.5;
  for (int coord = 0; coord < 2; ++coord) {
    double p = params[coord], m = 0.0, v = 0.0;
    for (int t = 1; t <= 2; ++t) {
      const double g = grad[coord];
      m = b1 * m + (1 - b1) * g;
      v = b2 * v + (1 - b2) * g * g;
      const double m_hat = m / (1 - std::pow(b1, t));
      const double v_hat = v / (1 - std::pow(b2, t));
      p -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
    ParamVector copy = params;
    AdamState copy_state = state;
    AdamStep(copy, grad, copy_state);
    AdamStep(copy, grad, copy_state);
    EXPECT_NEAR(copy[coord], p, 1e-12);
    EXPECT_EQ(copy_state.step_count, 2);
  }
}

TEST(AdamTest, DeterministicAndFinite) {
  Rng rng(8);
  ParamVector a = VectorXd::Random(6), b = a;
  AdamState sa = AdamState::ForSize(6, 1e-2), sb = sa;
  for (int step = 0; step < 100; ++step) {
    VectorXd g(6);
    for (int i = 0; i < 6; ++i) g[i] = rng.Normal() * 1e3;
    AdamStep(a, g, sa);
    AdamStep(b, g, sb);
  }
  EXPECT_EQ(a, b);
  EXPECT_TRUE(a.allFinite());
}

TEST(ClipTest, RescalesOnlyAboveThreshold) {
  VectorXd g(2);
  g << 3.0, 4.0;
  EXPECT_DOUBLE_EQ(ClipByGlobalNorm(g, 10.0), 5.0);
  EXPECT_EQ(g, (VectorXd(2) << 3.0, 4.0).finished());
  EXPECT_DOUBLE_EQ(ClipByGlobalNorm(g, 1.0), 5.0);
  EXPECT_NEAR(g.norm(), 1.0, 1e-15);
}

TEST(PolyakTest, EndpointsAndScalarBlend) {
  VectorXd target(2), online(2);
  target << 0.0, 2.0;
  online << 1.0, -1.0;
  EXPECT_EQ(PolyakUpdate(target, online, 1.0), online);
  EXPECT_EQ(PolyakUpdate(target, online, 0.0), target);
  const VectorXd blended = PolyakUpdate(target, online, 0.8);
  EXPECT_NEAR(blended[0], 0.8, 1e-15);
  EXPECT_NEAR(blended[1], -0.4, 1e-15);
}

TEST(PolyakTest, RejectsTauOutsideUnitInterval) {
  const VectorXd v = VectorXd::Zero(2);
  EXPECT_THROW(PolyakUpdate(v, v, -0.1), ConfigError);
  EXPECT_THROW(PolyakUpdate(v, v, 1.5), ConfigError);
}

TEST(PolyakTest, OutputIsConvexCombination) {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    VectorXd target(4), online(4);
    for (int i = 0; i < 4; ++i) {
      target[i] = rng.Uniform(-5.0, 5.0);
      online[i] = rng.Uniform(-5.0, 5.0);
    }
    const VectorXd out = PolyakUpdate(target, online, rng.Uniform());
    for (int i = 0; i < 4; ++i) {
      EXPECT_GE(out[i], std::min(target[i], online[i]) - 1e-15);
      EXPECT_LE(out[i], std::max(target[i], online[i]) + 1e-15);
    }
  }
}

TEST(ActivationTest, NamesRoundTrip) {
  for (Activation a :
       {Activation::kIdentity, Activation::kTanh, Activation::kRelu}) {
    EXPECT_EQ(ParseActivation(ActivationName(a)), a);
  }
  EXPECT_THROW(ParseActivation("sigmoid"), ConfigError);
}

}  // namespace
}  // namespace piper
