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

#ifndef PIPER_DIFFMATH_H_
#define PIPER_DIFFMATH_H_

// Dense feed-forward networks over flat parameter vectors: batched forward
// evaluation, reverse-mode gradients, Adam and Polyak blending. Batches are
// stored one sample per column.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "piper/rng.h"

namespace piper {

enum class Activation { kIdentity, kTanh, kRelu };

std::string ActivationName(Activation activation);
Activation ParseActivation(const std::string& name);

struct NetSpec {
  std::vector<int> layer_sizes;
  Activation hidden_activation = Activation::kTanh;
  Activation output_activation = Activation::kIdentity;

  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  // Number of affine layers.
  int num_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
  Eigen::Index ParamCount() const;

  // Throws StructuralError unless layer_sizes has >= 2 positive entries.
  void Validate() const;

  friend bool operator==(const NetSpec&, const NetSpec&) = default;
};

// Layer l stores its weight matrix (out x in, column-major) followed by its
// bias vector.
using ParamVector = Eigen::VectorXd;

// MLP spec with `hidden_layers` hidden layers of width `width`.
NetSpec MakeMlpSpec(int input_size, int width, int hidden_layers,
                    int output_size, Activation hidden, Activation output);

// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
ParamVector InitParams(const NetSpec& spec, Rng& rng);

// Post-activation values of every layer; activations[0] is the input.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> activations;
};

Eigen::VectorXd NetForward(const ParamVector& params, const NetSpec& spec,
                           const Eigen::VectorXd& input);

// inputs: input_size x batch. Fills `cache` when given, for NetBackward.
Eigen::MatrixXd NetForwardBatch(const ParamVector& params, const NetSpec& spec,
                                const Eigen::MatrixXd& inputs,
                                ForwardCache* cache = nullptr);

// Reverse pass from dL/d(outputs). Either output pointer may be null;
// param_grad is overwritten, not accumulated.
void NetBackward(const ParamVector& params, const NetSpec& spec,
                 const ForwardCache& cache, const Eigen::MatrixXd& output_grad,
                 Eigen::VectorXd* param_grad, Eigen::MatrixXd* input_grad);

// Loss over a batch of network outputs. Returns the (already averaged) loss
// value and writes dLoss/dOutputs into `output_grad` (same shape as outputs).
using BatchLoss = std::function<double(const Eigen::MatrixXd& outputs,
                                       Eigen::MatrixXd* output_grad)>;

// Gradient of `loss` with respect to params at the given batch.
Eigen::VectorXd NetGradient(const ParamVector& params, const NetSpec& spec,
                            const Eigen::MatrixXd& inputs,
                            const BatchLoss& loss,
                            double* loss_value = nullptr);

struct AdamState {
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  std::int64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double learning_rate = 1e-3;
  double eps_hat = 1e-8;

  static AdamState ForSize(Eigen::Index size, double learning_rate);
};

// Bias-corrected Adam: params -= lr * m_hat / (sqrt(v_hat) + eps_hat).
void AdamStep(ParamVector& params, const Eigen::VectorXd& grads,
              AdamState& state);

// Rescales grads in place so that ||grads||_2 <= max_norm. Returns the norm
// before clipping.
double ClipByGlobalNorm(Eigen::VectorXd& grads, double max_norm);

inline constexpr double kGradClipNorm = 10.0;

// tau * online + (1 - tau) * target. Throws ConfigError for tau outside
// [0, 1].
ParamVector PolyakUpdate(const ParamVector& target, const ParamVector& online,
                         double tau);

// A parameter vector paired with its layout and optimizer state.
struct Network {
  NetSpec spec;
  ParamVector params;
  AdamState adam;

  static Network Create(const NetSpec& spec, double learning_rate, Rng& rng);
  Eigen::MatrixXd Forward(const Eigen::MatrixXd& inputs,
                          ForwardCache* cache = nullptr) const {
    return NetForwardBatch(params, spec, inputs, cache);
  }
  // Clips grads at kGradClipNorm and applies one Adam step.
  void ApplyGradient(Eigen::VectorXd grads);
};

}  // namespace piper

#endif  // PIPER_DIFFMATH_H_
