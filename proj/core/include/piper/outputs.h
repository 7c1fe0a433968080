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

#ifndef PIPER_OUTPUTS_H_
#define PIPER_OUTPUTS_H_

#include <string>
#include <vector>

#include "piper/config.h"
#include "piper/trainer.h"

namespace piper {

inline constexpr char kTrainCsvVersionLine[] = "# piper train log v1";
// Column order of train.csv.
const std::vector<std::string>& TrainCsvColumns();

// Version comment line, header row, then one row per log entry.
std::string TrainCsv(const TrainLog& log);
// Parses TrainCsv output back into rows. Throws IoError on schema mismatch.
TrainLog ParseTrainCsv(const std::string& text);

// Success rate against env steps: evaluation points and a trailing mean of
// training-episode success.
std::string CurvesSvg(const TrainLog& log, const std::string& title);

// Writes train.csv, config.resolved and curves.svg under `dir`, each via a
// temp file and rename.
void EmitOutputs(const TrainLog& log, const ExperimentConfig& config,
                 const std::string& dir);

struct RunSummary {
  std::string variant;
  std::uint64_t seed = 0;
  std::int64_t env_steps = 0;
  double final_eval_success = -1.0;
  double best_eval_success = -1.0;
  double mean_probe_drift = -1.0;
  double label_informative_fraction = -1.0;
};
RunSummary Summarize(const Trainer& trainer);
std::string ComparisonCsv(const std::vector<RunSummary>& runs);

}  // namespace piper

#endif  // PIPER_OUTPUTS_H_
