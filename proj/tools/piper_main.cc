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

// Command-line front end: train, eval, ablate and oracle subcommands.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime failure.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "piper/checkpoint.h"
#include "piper/config.h"
#include "piper/errors.h"
#include "piper/oracles.h"
#include "piper/outputs.h"
#include "piper/trainer.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

namespace fs = std::filesystem;
using piper::ConfigError;
using piper::ExperimentConfig;
using piper::Trainer;

struct TrainArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string variant;
  std::string out;
  std::string resume;
  std::vector<std::string> overrides;
  bool quiet = false;
};

ExperimentConfig ResolveConfig(const std::string& path,
                               const std::vector<std::string>& overrides) {
  ExperimentConfig config =
      path.empty() ? ExperimentConfig{} : piper::LoadConfig(path);
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--set expects key=value, got '" + kv + "'");
    }
    piper::SetConfigValue(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return config;
}

void Progress(const Trainer& t, bool quiet) {
  const piper::TrainLogRow& row = t.log().rows.back();
  if (quiet || row.eval_success < 0.0) return;
  std::fprintf(stderr, "[%s seed %llu] step %lld episode %lld eval %.3f\n",
               piper::VariantName(t.config().variant).c_str(),
               static_cast<unsigned long long>(t.config().seed),
               static_cast<long long>(row.env_step),
               static_cast<long long>(row.episode), row.eval_success);
}

// Runs (or resumes) one training job and writes its outputs.
Trainer TrainOne(const ExperimentConfig& config, const std::string& resume,
                 bool quiet) {
  Trainer trainer = resume.empty()
                        ? Trainer(config)
                        : Trainer::LoadCheckpoint(resume, &config);
  const fs::path dir(config.output_dir);
  std::int64_t next_checkpoint =
      config.checkpoint_interval > 0
          ? (trainer.env_step() / config.checkpoint_interval + 1) *
                config.checkpoint_interval
          : -1;
  trainer.Run([&](const Trainer& t) {
    Progress(t, quiet);
    if (next_checkpoint > 0 && t.env_step() >= next_checkpoint) {
      piper::WriteFileAtomic((dir / "checkpoint.bin").string(),
                             t.SerializeCheckpoint());
      while (next_checkpoint <= t.env_step()) {
        next_checkpoint += config.checkpoint_interval;
      }
    }
  });
  piper::EmitOutputs(trainer.log(), config, config.output_dir);
  piper::WriteFileAtomic((dir / "checkpoint.bin").string(),
                         trainer.SerializeCheckpoint());
  return trainer;
}

int RunTrain(const TrainArgs& args) {
  ExperimentConfig config = ResolveConfig(args.config_path, args.overrides);
  if (args.seed) config.seed = *args.seed;
  if (!args.variant.empty()) config.variant = piper::ParseVariant(args.variant);
  if (!args.out.empty()) config.output_dir = args.out;
  config.Validate();
  const Trainer trainer = TrainOne(config, args.resume, args.quiet);
  const piper::RunSummary s = piper::Summarize(trainer);
  std::printf("%s seed %llu: %lld steps, final eval %.3f, output %s\n",
              s.variant.c_str(), static_cast<unsigned long long>(s.seed),
              static_cast<long long>(s.env_steps), s.final_eval_success,
              config.output_dir.c_str());
  return kExitOk;
}

int RunEval(const std::string& ckpt, int episodes, std::uint64_t seed) {
  const Trainer trainer = Trainer::LoadCheckpoint(ckpt);
  const piper::EvalResult result = trainer.Evaluate(episodes, seed);
  if (result.empty) {
    std::printf("warning: 0 episodes requested; success rate defined as 0\n");
  }
  std::printf("success_rate %.6f episodes %d seed %llu\n", result.success_rate,
              result.episodes, static_cast<unsigned long long>(seed));
  return kExitOk;
}

std::vector<std::uint64_t> ParseSeeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  const auto dots = text.find("..");
  try {
    if (dots != std::string::npos) {
      const std::uint64_t first = std::stoull(text.substr(0, dots));
      const std::uint64_t last = std::stoull(text.substr(dots + 2));
      if (last < first) throw ConfigError("seed range is empty: " + text);
      for (std::uint64_t s = first; s <= last; ++s) seeds.push_back(s);
    } else {
      std::stringstream in(text);
      std::string item;
      while (std::getline(in, item, ',')) seeds.push_back(std::stoull(item));
    }
  } catch (const std::logic_error&) {
    throw ConfigError("cannot parse seeds '" + text + "'");
  }
  if (seeds.empty()) throw ConfigError("no seeds given");
  return seeds;
}

std::vector<piper::Variant> ParseVariantList(const std::string& text) {
  std::vector<piper::Variant> variants;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    variants.push_back(piper::ParseVariant(item));
  }
  if (variants.empty()) throw ConfigError("no variants given");
  return variants;
}

int RunAblate(const TrainArgs& args, const std::string& variants,
              const std::string& seeds) {
  const ExperimentConfig base = ResolveConfig(args.config_path, args.overrides);
  const fs::path out = args.out.empty() ? fs::path("ablation") : fs::path(args.out);
  std::vector<piper::RunSummary> runs;
  for (piper::Variant variant : ParseVariantList(variants)) {
    for (std::uint64_t seed : ParseSeeds(seeds)) {
      ExperimentConfig config = base;
      config.variant = variant;
      config.seed = seed;
      config.output_dir = (out / piper::VariantName(variant) /
                           ("seed_" + std::to_string(seed)))
                              .string();
      config.Validate();
      runs.push_back(piper::Summarize(TrainOne(config, "", args.quiet)));
      piper::WriteFileAtomic((out / "comparison.csv").string(),
                             piper::ComparisonCsv(runs));
    }
  }
  std::fputs(piper::ComparisonCsv(runs).c_str(), stdout);
  return kExitOk;
}

int RunOracle() {
  std::vector<piper::OracleReport> reports;
  reports.push_back(piper::RunGradientOracle());
  reports.push_back(piper::RunDerivationOracle());
  for (piper::OracleReport& r : piper::RunBtOracle()) reports.push_back(r);
  bool ok = true;
  for (const piper::OracleReport& r : reports) {
    std::printf("%s %s: %s (%.2fs)\n", r.passed ? "PASS" : "FAIL",
                r.name.c_str(), r.detail.c_str(), r.seconds);
    ok = ok && r.passed;
  }
  return ok ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Preference-based hierarchical RL experiments"};
  app.require_subcommand(1);

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Train one configuration");
  train->add_option("--config", train_args.config_path, "Config file")
      ->required();
  train->add_option("--seed", train_args.seed, "Override the seed");
  train->add_option("--variant", train_args.variant, "Override the variant");
  train->add_option("--out", train_args.out, "Output directory");
  train->add_option("--resume", train_args.resume, "Checkpoint to resume");
  train->add_option("--set", train_args.overrides, "key=value override");
  train->add_flag("--quiet", train_args.quiet, "No progress output");

  std::string ckpt;
  int episodes = 100;
  std::uint64_t eval_seed = 0;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("--ckpt", ckpt, "Checkpoint path")->required();
  eval->add_option("--episodes", episodes, "Episode count");
  eval->add_option("--seed", eval_seed, "Evaluation seed");

  TrainArgs ablate_args;
  std::string variants = "piper,no_v,no_hr,no_target,hier";
  std::string seeds = "0..4";
  CLI::App* ablate = app.add_subcommand("ablate", "Run a variant x seed grid");
  ablate->add_option("--config", ablate_args.config_path, "Config file")
      ->required();
  ablate->add_option("--variants", variants, "Comma-separated variants");
  ablate->add_option("--seeds", seeds, "Seeds, 'a..b' or comma-separated");
  ablate->add_option("--out", ablate_args.out, "Output directory");
  ablate->add_option("--set", ablate_args.overrides, "key=value override");
  ablate->add_flag("--quiet", ablate_args.quiet, "No progress output");

  CLI::App* oracle =
      app.add_subcommand("oracle", "Run gradient and density self-checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train) return RunTrain(train_args);
    if (*eval) return RunEval(ckpt, episodes, eval_seed);
    if (*ablate) return RunAblate(ablate_args, variants, seeds);
    if (*oracle) return RunOracle();
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitRuntime;
}
