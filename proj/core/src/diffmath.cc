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

#include <cmath>
#include <string>

#include "piper/errors.h"

namespace piper {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

using ConstMatrixMap = Eigen::Map<const MatrixXd>;
using ConstVectorMap = Eigen::Map<const VectorXd>;

// tanh rounds to exactly +-1 for large inputs; keep outputs in the open
// interval.
const double kTanhBound = std::nextafter(1.0, 0.0);

void ApplyActivation(Activation activation, MatrixXd& values) {
  switch (activation) {
    case Activation::kIdentity:
      return;
    case Activation::kTanh:
      values = values.array().tanh().min(kTanhBound).max(-kTanhBound);
      return;
    case Activation::kRelu:
      values = values.array().max(0.0);
      return;
  }
}

// Multiplies `grad` by the activation derivative, expressed through the
// post-activation values.
void ScaleByDerivative(Activation activation, const MatrixXd& post,
                       MatrixXd& grad) {
  switch (activation) {
    case Activation::kIdentity:
      return;
    case Activation::kTanh:
      grad.array() *= 1.0 - post.array().square();
      return;
    case Activation::kRelu:
      grad.array() *= (post.array() > 0.0).cast<double>();
      return;
  }
}

Activation LayerActivation(const NetSpec& spec, int layer) {
  return layer + 1 == spec.num_layers() ? spec.output_activation
                                        : spec.hidden_activation;
}

}  // namespace

std::string ActivationName(Activation activation) {
  switch (activation) {
    case Activation::kIdentity:
      return "identity";
    case Activation::kTanh:
      return "tanh";
    case Activation::kRelu:
      return "relu";
  }
  return "unknown";
}

Activation ParseActivation(const std::string& name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  throw ConfigError("unknown activation '" + name + "'");
}

Index NetSpec::ParamCount() const {
  Index count = 0;
  for (int l = 0; l + 1 < static_cast<int>(layer_sizes.size()); ++l) {
    count += static_cast<Index>(layer_sizes[l + 1]) * (layer_sizes[l] + 1);
  }
  return count;
}

void NetSpec::Validate() const {
  PIPER_CHECK(layer_sizes.size() >= 2, "a network needs at least two layers");
  for (int size : layer_sizes) {
    PIPER_CHECK(size >= 1, "layer sizes must be positive");
  }
}

NetSpec MakeMlpSpec(int input_size, int width, int hidden_layers,
                    int output_size, Activation hidden, Activation output) {
  NetSpec spec;
  spec.layer_sizes.push_back(input_size);
  for (int i = 0; i < hidden_layers; ++i) spec.layer_sizes.push_back(width);
  spec.layer_sizes.push_back(output_size);
  spec.hidden_activation = hidden;
  spec.output_activation = output;
  spec.Validate();
  return spec;
}

ParamVector InitParams(const NetSpec& spec, Rng& rng) {
  spec.Validate();
  ParamVector params = ParamVector::Zero(spec.ParamCount());
  Index offset = 0;
  for (int l = 0; l < spec.num_layers(); ++l) {
    const int in = spec.layer_sizes[l];
    const int out = spec.layer_sizes[l + 1];
    const double limit = std::sqrt(6.0 / (in + out));
    for (Index i = 0; i < static_cast<Index>(in) * out; ++i) {
      params[offset + i] = rng.Uniform(-limit, limit);
    }
    offset += static_cast<Index>(in) * out + out;
  }
  return params;
}

MatrixXd NetForwardBatch(const ParamVector& params, const NetSpec& spec,
                         const MatrixXd& inputs, ForwardCache* cache) {
  PIPER_CHECK(params.size() == spec.ParamCount(),
              "parameter vector does not match the network layout");
  PIPER_CHECK(inputs.rows() == spec.input_size(),
              "input has " + std::to_string(inputs.rows()) + " rows, expected " +
                  std::to_string(spec.input_size()));
  if (cache != nullptr) {
    cache->activations.clear();
    cache->activations.reserve(spec.layer_sizes.size());
    cache->activations.push_back(inputs);
  }
  MatrixXd current = inputs;
  Index offset = 0;
  for (int l = 0; l < spec.num_layers(); ++l) {
    const int in = spec.layer_sizes[l];
    const int out = spec.layer_sizes[l + 1];
    ConstMatrixMap weights(params.data() + offset, out, in);
    ConstVectorMap bias(params.data() + offset + static_cast<Index>(in) * out,
                        out);
    offset += static_cast<Index>(in) * out + out;
    MatrixXd next = weights * current;
    next.colwise() += bias;
    ApplyActivation(LayerActivation(spec, l), next);
    if (cache != nullptr) cache->activations.push_back(next);
    current = std::move(next);
  }
  return current;
}

VectorXd NetForward(const ParamVector& params, const NetSpec& spec,
                    const VectorXd& input) {
  return NetForwardBatch(params, spec, input);
}

void NetBackward(const ParamVector& params, const NetSpec& spec,
                 const ForwardCache& cache, const MatrixXd& output_grad,
                 VectorXd* param_grad, MatrixXd* input_grad) {
  const int layers = spec.num_layers();
  PIPER_CHECK(static_cast<int>(cache.activations.size()) == layers + 1,
              "forward cache does not match the network");
  PIPER_CHECK(output_grad.rows() == spec.output_size() &&
                  output_grad.cols() == cache.activations.back().cols(),
              "output gradient shape mismatch");
  if (param_grad != nullptr) param_grad->setZero(spec.ParamCount());

  std::vector<Index> offsets(layers);
  Index offset = 0;
  for (int l = 0; l < layers; ++l) {
    offsets[l] = offset;
    offset += static_cast<Index>(spec.layer_sizes[l]) * spec.layer_sizes[l + 1] +
              spec.layer_sizes[l + 1];
  }

  MatrixXd delta = output_grad;
  for (int l = layers - 1; l >= 0; --l) {
    const int in = spec.layer_sizes[l];
    const int out = spec.layer_sizes[l + 1];
    ScaleByDerivative(LayerActivation(spec, l), cache.activations[l + 1],
                      delta);
    if (param_grad != nullptr) {
      Eigen::Map<MatrixXd> weight_grad(param_grad->data() + offsets[l], out,
                                       in);
      weight_grad.noalias() = delta * cache.activations[l].transpose();
      param_grad->segment(offsets[l] + static_cast<Index>(in) * out, out) =
          delta.rowwise().sum();
    }
    if (l == 0 && input_grad == nullptr) break;
    ConstMatrixMap weights(params.data() + offsets[l], out, in);
    MatrixXd upstream = weights.transpose() * delta;
    if (l == 0) {
      *input_grad = std::move(upstream);
    } else {
      delta = std::move(upstream);
    }
  }
}

VectorXd NetGradient(const ParamVector& params, const NetSpec& spec,
                     const MatrixXd& inputs, const BatchLoss& loss,
                     double* loss_value) {
  PIPER_CHECK(inputs.cols() > 0, "batch must be non-empty");
  ForwardCache cache;
  const MatrixXd outputs = NetForwardBatch(params, spec, inputs, &cache);
  MatrixXd output_grad = MatrixXd::Zero(outputs.rows(), outputs.cols());
  const double value = loss(outputs, &output_grad);
  if (loss_value != nullptr) *loss_value = value;
  VectorXd grad;
  NetBackward(params, spec, cache, output_grad, &grad, nullptr);
  return grad;
}

AdamState AdamState::ForSize(Index size, double learning_rate) {
  AdamState state;
  state.first_moment = VectorXd::Zero(size);
  state.second_moment = VectorXd::Zero(size);
  state.learning_rate = learning_rate;
  return state;
}

void AdamStep(ParamVector& params, const VectorXd& grads, AdamState& state) {
  PIPER_CHECK(params.size() == grads.size() &&
                  params.size() == state.first_moment.size() &&
                  params.size() == state.second_moment.size(),
              "Adam: length mismatch");
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  state.first_moment =
      state.beta1 * state.first_moment + (1.0 - state.beta1) * grads;
  state.second_moment = state.beta2 * state.second_moment +
                        (1.0 - state.beta2) * grads.array().square().matrix();
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  params.array() -= state.learning_rate *
                    (state.first_moment.array() / correction1) /
                    ((state.second_moment.array() / correction2).sqrt() +
                     state.eps_hat);
}

double ClipByGlobalNorm(VectorXd& grads, double max_norm) {
  const double norm = grads.norm();
  if (norm > max_norm) grads *= max_norm / norm;
  return norm;
}

ParamVector PolyakUpdate(const ParamVector& target, const ParamVector& online,
                         double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw ConfigError("polyak tau must lie in [0, 1], got " +
                      std::to_string(tau));
  }
  PIPER_CHECK(target.size() == online.size(), "polyak: length mismatch");
  if (tau == 1.0) return online;
  if (tau == 0.0) return target;
  return tau * online + (1.0 - tau) * target;
}

Network Network::Create(const NetSpec& spec, double learning_rate, Rng& rng) {
  Network net;
  net.spec = spec;
  net.params = InitParams(spec, rng);
  net.adam = AdamState::ForSize(net.params.size(), learning_rate);
  return net;
}

void Network::ApplyGradient(VectorXd grads) {
  ClipByGlobalNorm(grads, kGradClipNorm);
  AdamStep(params, grads, adam);
}

}  // namespace piper
