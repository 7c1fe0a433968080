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


#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "piper/checkpoint.h"
#include "piper/config.h"
#include "piper/errors.h"
#include "piper/outputs.h"
#include "piper/trainer.h"

namespace piper {
namespace {

namespace fs = std::filesystem;

// A few hundred steps with tiny networks; every pipeline stage runs.
constexpr char kSmallConfig[] = R"(# small run
total_steps = 900
k = 5
horizon = 20
batch_size = 32
net_width = 16
net_depth = 2
reward_width = 16
reward_depth = 1
update_after = 200
n_batches = 2
reward_updates = 2
pairs_per_iteration = 3
eval_interval = 300
eval_episodes = 3
probe_interval = 200
probe_size = 16
)";

ExperimentConfig SmallConfig(Variant variant = Variant::kPiper,
                             std::uint64_t seed = 0) {
  ExperimentConfig config = ParseConfigString(kSmallConfig);
  config.variant = variant;
  config.seed = seed;
  return config;
}

TrainLog RunToEnd(const ExperimentConfig& config) {
  Trainer trainer(config);
  trainer.Run();
  return trainer.log();
}

fs::path FreshDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() /
                       ("piper_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string ConfigErrorMessage(const std::string& text) {
  try {
    ParseConfigString(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(ConfigTest, EmptyFileGivesDefaults) {
  const ExperimentConfig config = ParseConfigString("");
  EXPECT_EQ(config, ExperimentConfig{});
  EXPECT_EQ(config.env, EnvKind::kMaze);
  EXPECT_EQ(config.k, 10);
  EXPECT_EQ(config.horizon, 60);
  EXPECT_EQ(config.alpha, 1e-5);
  EXPECT_EQ(config.tau, 0.8);
  EXPECT_EQ(config.variant, Variant::kPiper);
  EXPECT_EQ(config.n_batches, 10);
  EXPECT_EQ(config.reward_batch_size, 50);
}

TEST(ConfigTest, KAboveHorizonNamesBothKeys) {
  const std::string message = ConfigErrorMessage("horizon = 8\nk = 12\n");
  EXPECT_NE(message.find("k (line 2)"), std::string::npos) << message;
  EXPECT_NE(message.find("horizon (line 1)"), std::string::npos) << message;
}

TEST(ConfigTest, UnknownKeyRejectedWithKeyAndLine) {
  const std::string message =
      ConfigErrorMessage("# comment\nseed = 3\nlearning_rat = 0.1\n");
  EXPECT_NE(message.find("learning_rat"), std::string::npos) << message;
  EXPECT_NE(message.find("line 3"), std::string::npos) << message;
}

TEST(ConfigTest, MalformedValuesAndVariantsRejected) {
  EXPECT_THROW(ParseConfigString("variant = flat\n"), ConfigError);
  EXPECT_THROW(ParseConfigString("k = ten\n"), ConfigError);
  EXPECT_THROW(ParseConfigString("alpha = -1\n"), ConfigError);
  EXPECT_THROW(ParseConfigString("beta = 0\n"), ConfigError);
  EXPECT_THROW(ParseConfigString("tau = 0\n"), ConfigError);
  EXPECT_THROW(ParseConfigString("seed = 1\nseed = 2\n"), ConfigError);
  EXPECT_THROW(ParseConfigString("no equals sign\n"), ConfigError);
  EXPECT_THROW(LoadConfig("/nonexistent/piper.cfg"), ConfigError);
}

TEST(ConfigTest, WriteThenParseRoundTrips) {
  ExperimentConfig config = SmallConfig(Variant::kNoHr, 17);
  config.alpha = 1.0 / 3.0;
  config.env = EnvKind::kPush;
  config.output_dir = "some/where";
  config.relabel_lower_her = false;
  config.original_goal = OriginalGoal::kEpisode;
  EXPECT_EQ(ParseConfigString(ConfigToString(config)), config);
  for (Variant v : AllVariants()) EXPECT_EQ(ParseVariant(VariantName(v)), v);
}

TEST(ConfigTest, CommandLineOverride) {
  ExperimentConfig config;
  SetConfigValue(config, "k", "7");
  SetConfigValue(config, "variant", "hier");
  EXPECT_EQ(config.k, 7);
  EXPECT_EQ(config.variant, Variant::kHier);
  EXPECT_THROW(SetConfigValue(config, "bogus", "1"), ConfigError);
}

TEST(TrainerTest, ZeroStepsGiveEmptyLogAndInitialCheckpoint) {
  ExperimentConfig config = SmallConfig();
  config.total_steps = 0;
  Trainer trainer(config);
  trainer.Run();
  EXPECT_TRUE(trainer.log().rows.empty());
  const std::string bytes = trainer.SerializeCheckpoint();
  const Trainer restored = Trainer::FromCheckpoint(bytes);
  EXPECT_EQ(restored.env_step(), 0);
  EXPECT_EQ(restored.SerializeCheckpoint(), bytes);
}

TEST(TrainerTest, LogRowsAreWellFormed) {
  Trainer trainer(SmallConfig());
  trainer.Run();
  const auto& rows = trainer.log().rows;
  ASSERT_FALSE(rows.empty());
  std::int64_t previous = 0;
  bool evaluated = false;
  for (const TrainLogRow& row : rows) {
    EXPECT_GT(row.env_step, previous);
    previous = row.env_step;
    EXPECT_TRUE(row.success == 0 || row.success == 1);
    evaluated |= row.eval_success >= 0.0;
  }
  EXPECT_GE(rows.back().env_step, 900);
  EXPECT_TRUE(evaluated);
  EXPECT_FALSE(trainer.dataset().empty());
  for (const PreferenceTuple& tuple : trainer.dataset()) {
    EXPECT_TRUE(tuple.y.IsValid());
    EXPECT_EQ(tuple.length,
              std::min(tuple.sigma1->size(), tuple.sigma2->size()));
    EXPECT_NE(tuple.sigma1->id, tuple.sigma2->id);
  }
  EXPECT_FALSE(trainer.probe_drifts().empty());
}

TEST(TrainerTest, HierSkipsPreferencesAndUsesStoredSums) {
  Trainer trainer(SmallConfig(Variant::kHier));
  trainer.Run();
  for (const TrainLogRow& row : trainer.log().rows) {
    EXPECT_EQ(row.reward_model_loss, 0.0);
  }
  EXPECT_TRUE(trainer.dataset().empty());
  const auto sampled = trainer.high_buffer().Sample(64, trainer.replay_rng());
  std::vector<HighTransition> batch;
  for (const auto& s : sampled) batch.push_back(s.transition);
  const Eigen::VectorXd rewards = trainer.HighRewards(batch);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    EXPECT_EQ(rewards[static_cast<Eigen::Index>(i)], batch[i].r_sum);
  }
}

TEST(TrainerTest, PiperRelabelsWithTargetModel) {
  Trainer trainer(SmallConfig());
  trainer.Run();
  const auto sampled = trainer.high_buffer().Sample(32, trainer.replay_rng());
  std::vector<HighTransition> batch;
  for (const auto& s : sampled) batch.push_back(s.transition);
  const Eigen::VectorXd rewards = trainer.HighRewards(batch);
  const auto relabeled = RelabelHighBatch(batch, trainer.reward_model());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    EXPECT_EQ(rewards[static_cast<Eigen::Index>(i)], relabeled[i].r_sum);
  }
  EXPECT_EQ(&trainer.RelabelParams(), &trainer.reward_model().phi_target);
}

TEST(TrainerTest, RepeatedRunsGiveIdenticalCsv) {
  for (Variant v : {Variant::kPiper, Variant::kRflat}) {
    const ExperimentConfig config = SmallConfig(v, 5);
    EXPECT_EQ(TrainCsv(RunToEnd(config)), TrainCsv(RunToEnd(config)))
        << VariantName(v);
  }
}

TEST(TrainerTest, SeedChangesTheRun) {
  EXPECT_NE(TrainCsv(RunToEnd(SmallConfig(Variant::kPiper, 1))),
            TrainCsv(RunToEnd(SmallConfig(Variant::kPiper, 2))));
}

TEST(TrainerTest, FullTauMakesTargetAblationIdentical) {
  ExperimentConfig piper = SmallConfig(Variant::kPiper, 3);
  piper.tau = 1.0;
  ExperimentConfig no_target = piper;
  no_target.variant = Variant::kNoTarget;
  EXPECT_EQ(TrainCsv(RunToEnd(piper)), TrainCsv(RunToEnd(no_target)));
}

TEST(TrainerTest, ZeroAlphaLabelsMatchNoValueVariant) {
  ExperimentConfig piper = SmallConfig(Variant::kPiper, 4);
  piper.alpha = 0.0;
  ExperimentConfig no_v = piper;
  no_v.variant = Variant::kNoV;
  Trainer a(piper), b(no_v);
  a.Run();
  b.Run();
  ASSERT_EQ(a.dataset().size(), b.dataset().size());
  ASSERT_FALSE(a.dataset().empty());
  for (std::size_t i = 0; i < a.dataset().size(); ++i) {
    EXPECT_EQ(a.dataset()[i].y, b.dataset()[i].y);
    EXPECT_EQ(a.dataset()[i].g_hat, b.dataset()[i].g_hat);
    EXPECT_EQ(a.dataset()[i].sigma1->id, b.dataset()[i].sigma1->id);
  }
  EXPECT_EQ(TrainCsv(a.log()), TrainCsv(b.log()));
}

TEST(TrainerTest, NoHindsightUsesOneTuplePerPair) {
  Trainer trainer(SmallConfig(Variant::kNoHr, 6));
  trainer.Run();
  for (const PreferenceTuple& tuple : trainer.dataset()) {
    // Only sampled task goals appear: never a segment-end state.
    bool from_trajectory = false;
    for (const HighTrajectory* sigma : {tuple.sigma1.get(), tuple.sigma2.get()}) {
      for (const Eigen::VectorXd& g : sigma->achieved_tail) {
        from_trajectory |= g == tuple.g_hat;
      }
    }
    EXPECT_FALSE(from_trajectory);
  }
}

TEST(TrainerTest, CheckpointResumeReproducesTail) {
  const ExperimentConfig config = SmallConfig(Variant::kPiper, 8);
  const TrainLog full = RunToEnd(config);

  ExperimentConfig half = config;
  half.total_steps = 450;
  Trainer first(half);
  first.Run();
  const std::string bytes = first.SerializeCheckpoint();
  Trainer resumed = Trainer::FromCheckpoint(bytes, &config);
  EXPECT_EQ(Trainer::FromCheckpoint(bytes).SerializeCheckpoint(), bytes);
  resumed.Run();
  EXPECT_EQ(TrainCsv(resumed.log()), TrainCsv(full));
}

TEST(TrainerTest, ResumeRejectsChangedConfig) {
  ExperimentConfig config = SmallConfig();
  config.total_steps = 100;
  Trainer trainer(config);
  trainer.Run();
  ExperimentConfig changed = config;
  changed.alpha = 0.5;
  EXPECT_THROW(Trainer::FromCheckpoint(trainer.SerializeCheckpoint(), &changed),
               ConfigError);
  EXPECT_THROW(Trainer::FromCheckpoint("garbage"), IoError);
}

TEST(EvaluateTest, ZeroEpisodesIsFlaggedAndSameSeedRepeats) {
  ExperimentConfig config = SmallConfig();
  config.total_steps = 300;
  Trainer trainer(config);
  trainer.Run();
  const EvalResult none = trainer.Evaluate(0, 1);
  EXPECT_TRUE(none.empty);
  EXPECT_EQ(none.success_rate, 0.0);
  const Trainer restored =
      Trainer::FromCheckpoint(trainer.SerializeCheckpoint());
  for (std::uint64_t seed : {1u, 2u}) {
    const EvalResult a = trainer.Evaluate(10, seed);
    const EvalResult b = restored.Evaluate(10, seed);
    EXPECT_EQ(a.success_rate, b.success_rate);
    EXPECT_EQ(a.episodes, 10);
    EXPECT_GE(a.success_rate, 0.0);
    EXPECT_LE(a.success_rate, 1.0);
  }
}

TEST(OutputsTest, CsvHeaderRowsAndParse) {
  const TrainLog log = RunToEnd(SmallConfig());
  const std::string csv = TrainCsv(log);
  std::istringstream in(csv);
  std::string version, header;
  std::getline(in, version);
  std::getline(in, header);
  EXPECT_EQ(version, kTrainCsvVersionLine);
  EXPECT_EQ(header,
            "env_step,episode,success,episode_return,reward_model_loss,"
            "high_actor_loss,high_critic_loss,low_actor_loss,low_critic_loss,"
            "mean_relabeled_reward,label_informative_fraction,eval_success,"
            "probe_drift");
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) rows += !line.empty();
  EXPECT_EQ(rows, log.rows.size());
  const TrainLog parsed = ParseTrainCsv(csv);
  ASSERT_EQ(parsed.rows.size(), log.rows.size());
  EXPECT_EQ(TrainCsv(parsed), csv);
  EXPECT_THROW(ParseTrainCsv("a,b\n1,2\n"), IoError);
}

TEST(OutputsTest, EmitWritesFilesAndOverwritesAtomically) {
  const fs::path dir = FreshDir("emit");
  ExperimentConfig config = SmallConfig();
  config.total_steps = 200;
  const TrainLog log = RunToEnd(config);
  EmitOutputs(TrainLog{}, config, dir.string());
  EmitOutputs(log, config, dir.string());
  EXPECT_EQ(ReadFile((dir / "train.csv").string()), TrainCsv(log));
  EXPECT_EQ(LoadConfig((dir / "config.resolved").string()), config);
  const std::string svg = ReadFile((dir / "curves.svg").string());
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  for (const auto& entry : fs::directory_iterator(dir)) {
    EXPECT_NE(entry.path().extension(), ".tmp") << entry.path();
  }
  fs::remove_all(dir);
}

TEST(OutputsTest, UnwritablePathIsIoError) {
  EXPECT_THROW(WriteFileAtomic("/proc/piper_cannot_write/x", "data"), IoError);
}

int RunCli(const std::string& args) {
  const std::string command =
      std::string(PIPER_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(CliTest, ExitCodes) {
  const fs::path dir = FreshDir("cli");
  const fs::path good = dir / "good.cfg";
  const fs::path bad = dir / "bad.cfg";
  {
    std::ofstream(good) << kSmallConfig;
    std::ofstream(bad) << "k = 90\nhorizon = 10\n";
  }
  const std::string out = (dir / "run").string();
  EXPECT_EQ(RunCli("train --quiet --config " + good.string() + " --out " + out +
                   " --set total_steps=100"),
            0);
  EXPECT_TRUE(fs::exists(dir / "run" / "train.csv"));
  EXPECT_TRUE(fs::exists(dir / "run" / "checkpoint.bin"));
  EXPECT_EQ(RunCli("eval --ckpt " + out + "/checkpoint.bin --episodes 2 --seed 1"),
            0);
  EXPECT_EQ(RunCli("train --config " + bad.string() + " --out " + out), 2);
  EXPECT_EQ(RunCli("train --config " + good.string() + " --variant nope"), 2);
  EXPECT_EQ(RunCli("train --bogus-flag"), 2);
  EXPECT_EQ(RunCli("eval --ckpt " + (dir / "missing.bin").string() +
                   " --episodes 1 --seed 0"),
            3);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace piper
