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

#include <memory>
#include <vector>

#include <Eigen/Core>

#include "benchmark/benchmark.h"
#include "piper/diffmath.h"
#include "piper/environments.h"
#include "piper/hierarchy.h"
#include "piper/preference.h"
#include "piper/sac.h"
#include "piper/trainer.h"

namespace piper {
namespace {

using Eigen::MatrixXd;

NetSpec BenchSpec(int width) {
  return MakeMlpSpec(40, width, 3, 2, Activation::kRelu, Activation::kIdentity);
}

void BM_NetForwardBatch(benchmark::State& state) {
  Rng rng(1);
  const NetSpec spec = BenchSpec(static_cast<int>(state.range(0)));
  const ParamVector params = InitParams(spec, rng);
  const MatrixXd inputs = StandardNormal(40, state.range(1), rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(NetForwardBatch(params, spec, inputs));
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_NetForwardBatch)->Args({64, 1})->Args({64, 256})->Args({256, 256});

void BM_NetGradient(benchmark::State& state) {
  Rng rng(2);
  const NetSpec spec = BenchSpec(static_cast<int>(state.range(0)));
  const ParamVector params = InitParams(spec, rng);
  const MatrixXd inputs = StandardNormal(40, state.range(1), rng);
  const BatchLoss loss = [](const MatrixXd& y, MatrixXd* grad) {
    if (grad != nullptr) *grad = y / static_cast<double>(y.cols());
    return 0.5 * y.squaredNorm() / static_cast<double>(y.cols());
  };
  for (auto _ : state) {
    benchmark::DoNotOptimize(NetGradient(params, spec, inputs, loss));
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_NetGradient)->Args({64, 256})->Args({256, 256});

SacAgent BenchAgent(int state_dim, int width, Rng& rng) {
  SacHyper hyper;
  hyper.action_low = Eigen::VectorXd::Constant(2, -1.0);
  hyper.action_high = Eigen::VectorXd::Constant(2, 1.0);
  SacArchitecture arch;
  arch.width = width;
  return SacAgent::Create({state_dim, 2, 2}, hyper, arch, rng);
}

SacBatch RandomBatch(const SacAgent& agent, Eigen::Index size, Rng& rng) {
  SacBatch batch = SacBatch::Allocate(agent.dims, size);
  batch.states = StandardNormal(agent.dims.state_dim, size, rng);
  batch.goals = StandardNormal(2, size, rng);
  batch.actions = StandardNormal(2, size, rng).array().tanh();
  batch.rewards = -Eigen::VectorXd::Ones(size);
  batch.next_states = StandardNormal(agent.dims.state_dim, size, rng);
  batch.dones.setZero();
  return batch;
}

void BM_SacUpdate(benchmark::State& state) {
  Rng rng(3);
  SacAgent agent = BenchAgent(38, static_cast<int>(state.range(0)), rng);
  const SacBatch batch = RandomBatch(agent, state.range(1), rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(SacUpdate(agent, batch, rng));
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_SacUpdate)->Args({64, 256})->Args({32, 256})->Args({64, 128});

void BM_SelectAction(benchmark::State& state) {
  Rng rng(4);
  const SacAgent agent = BenchAgent(38, 64, rng);
  const Eigen::VectorXd s = StandardNormal(38, 1, rng);
  const Eigen::VectorXd g = StandardNormal(2, 1, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        SelectAction(agent, s, g, ActionMode::kStochastic, &rng));
  }
}
BENCHMARK(BM_SelectAction);

void BM_RewardModelStep(benchmark::State& state) {
  Rng rng(5);
  RewardModel model = RewardModel::Create(38, 2, 2, 64, 2, 1e-3, rng);
  std::vector<PreferenceTuple> dataset;
  for (int i = 0; i < 200; ++i) {
    auto make = [&](std::uint64_t id) {
      auto sigma = std::make_shared<HighTrajectory>();
      sigma->id = id;
      for (int e = 0; e < 6; ++e) {
        sigma->states.push_back(StandardNormal(38, 1, rng));
        sigma->subgoals.push_back(StandardNormal(2, 1, rng));
        sigma->achieved_tail.push_back(StandardNormal(2, 1, rng));
      }
      sigma->g_star = StandardNormal(2, 1, rng);
      return sigma;
    };
    PreferenceTuple t;
    t.sigma1 = make(2 * i);
    t.sigma2 = make(2 * i + 1);
    t.length = 6;
    t.g_hat = StandardNormal(2, 1, rng);
    t.y = PreferenceLabel::FirstPreferred();
    dataset.push_back(t);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        TrainRewardModelStep(model, dataset, state.range(0), rng));
  }
}
BENCHMARK(BM_RewardModelStep)->Arg(50);

void BM_TrainIteration(benchmark::State& state) {
  ExperimentConfig config;
  config.update_after = 0;
  config.total_steps = 1 << 30;
  Trainer trainer(config);
  for (int i = 0; i < 5; ++i) trainer.Iterate();
  for (auto _ : state) benchmark::DoNotOptimize(trainer.Iterate());
}
BENCHMARK(BM_TrainIteration)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace piper

BENCHMARK_MAIN();
