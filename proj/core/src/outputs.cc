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

#include "piper/outputs.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "piper/checkpoint.h"
#include "piper/errors.h"

namespace piper {
namespace {

std::string Num(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.10g", v);
  return buffer;
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream in(line);
  std::string cell;
  while (std::getline(in, cell, ',')) out.push_back(cell);
  return out;
}

std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '&':
        out += "&amp;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

}  // namespace

const std::vector<std::string>& TrainCsvColumns() {
  static const std::vector<std::string> columns = {
      "env_step",         "episode",
      "success",          "episode_return",
      "reward_model_loss", "high_actor_loss",
      "high_critic_loss", "low_actor_loss",
      "low_critic_loss",  "mean_relabeled_reward",
      "label_informative_fraction", "eval_success",
      "probe_drift"};
  return columns;
}

std::string TrainCsv(const TrainLog& log) {
  std::string out = kTrainCsvVersionLine;
  out += '\n';
  const auto& columns = TrainCsvColumns();
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i > 0) out += ',';
    out += columns[i];
  }
  out += '\n';
  for (const TrainLogRow& r : log.rows) {
    out += std::to_string(r.env_step) + ',' + std::to_string(r.episode) + ',' +
           std::to_string(r.success);
    for (double v : {r.episode_return, r.reward_model_loss, r.high_actor_loss,
                     r.high_critic_loss, r.low_actor_loss, r.low_critic_loss,
                     r.mean_relabeled_reward, r.label_informative_fraction,
                     r.eval_success, r.probe_drift}) {
      out += ',' + Num(v);
    }
    out += '\n';
  }
  return out;
}

TrainLog ParseTrainCsv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kTrainCsvVersionLine) {
    throw IoError("train.csv: missing version line");
  }
  if (!std::getline(in, line) || SplitCsv(line) != TrainCsvColumns()) {
    throw IoError("train.csv: header does not match schema");
  }
  TrainLog log;
  int line_number = 2;
  while (std::getline(in, line)) {
    ++line_number;
    const std::vector<std::string> cells = SplitCsv(line);
    if (cells.size() != TrainCsvColumns().size()) {
      throw IoError("train.csv: wrong cell count on line " +
                    std::to_string(line_number));
    }
    TrainLogRow r;
    try {
      r.env_step = std::stoll(cells[0]);
      r.episode = std::stoll(cells[1]);
      r.success = std::stoi(cells[2]);
      double* fields[] = {&r.episode_return,    &r.reward_model_loss,
                          &r.high_actor_loss,   &r.high_critic_loss,
                          &r.low_actor_loss,    &r.low_critic_loss,
                          &r.mean_relabeled_reward,
                          &r.label_informative_fraction, &r.eval_success,
                          &r.probe_drift};
      for (std::size_t i = 0; i < std::size(fields); ++i) {
        *fields[i] = std::stod(cells[i + 3]);
      }
    } catch (const std::exception&) {
      throw IoError("train.csv: bad number on line " +
                    std::to_string(line_number));
    }
    log.rows.push_back(r);
  }
  return log;
}

std::string CurvesSvg(const TrainLog& log, const std::string& title) {
  constexpr double kWidth = 640, kHeight = 400;
  constexpr double kLeft = 60, kRight = 20, kTop = 40, kBottom = 50;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const double max_step =
      log.rows.empty() ? 1.0
                       : std::max<double>(1.0, log.rows.back().env_step);
  const auto x = [&](double step) { return kLeft + plot_w * step / max_step; };
  const auto y = [&](double rate) { return kTop + plot_h * (1.0 - rate); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" font-family=\"sans-serif\" "
      << "font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" "
      << "font-size=\"14\">" << Escape(title) << "</text>\n";
  // Axes, grid and ticks.
  for (int i = 0; i <= 4; ++i) {
    const double rate = i / 4.0;
    svg << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + plot_w
        << "\" y1=\"" << y(rate) << "\" y2=\"" << y(rate)
        << "\" stroke=\"#ddd\"/>\n";
    svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << y(rate) + 4
        << "\" text-anchor=\"end\">" << Num(rate) << "</text>\n";
    const double step = max_step * i / 4.0;
    svg << "<text x=\"" << x(step) << "\" y=\"" << kTop + plot_h + 18
        << "\" text-anchor=\"middle\">" << Num(std::round(step))
        << "</text>\n";
  }
  svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 10
      << "\" text-anchor=\"middle\">environment steps</text>\n";
  svg << "<text x=\"16\" y=\"" << kTop + plot_h / 2
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << kTop + plot_h / 2 << ")\">success rate</text>\n";

  // Trailing mean of training success over the last 50 episodes.
  constexpr std::size_t kWindow = 50;
  std::ostringstream train_points;
  double window_sum = 0.0;
  for (std::size_t i = 0; i < log.rows.size(); ++i) {
    window_sum += log.rows[i].success;
    if (i >= kWindow) window_sum -= log.rows[i - kWindow].success;
    const double rate = window_sum / std::min(i + 1, kWindow);
    train_points << Num(x(log.rows[i].env_step)) << ',' << Num(y(rate)) << ' ';
  }
  svg << "<polyline fill=\"none\" stroke=\"#9ecae1\" stroke-width=\"1\" "
      << "points=\"" << train_points.str() << "\"/>\n";

  std::ostringstream eval_points;
  for (const TrainLogRow& r : log.rows) {
    if (r.eval_success < 0.0) continue;
    eval_points << Num(x(r.env_step)) << ',' << Num(y(r.eval_success)) << ' ';
  }
  svg << "<polyline fill=\"none\" stroke=\"#08519c\" stroke-width=\"2\" "
      << "points=\"" << eval_points.str() << "\"/>\n";

  svg << "<line x1=\"" << kLeft + 10 << "\" x2=\"" << kLeft + 30 << "\" y1=\""
      << kTop + 12 << "\" y2=\"" << kTop + 12
      << "\" stroke=\"#08519c\" stroke-width=\"2\"/>\n";
  svg << "<text x=\"" << kLeft + 36 << "\" y=\"" << kTop + 16
      << "\">evaluation</text>\n";
  svg << "<line x1=\"" << kLeft + 10 << "\" x2=\"" << kLeft + 30 << "\" y1=\""
      << kTop + 30 << "\" y2=\"" << kTop + 30 << "\" stroke=\"#9ecae1\"/>\n";
  svg << "<text x=\"" << kLeft + 36 << "\" y=\"" << kTop + 34
      << "\">training (last " << kWindow << " episodes)</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

void EmitOutputs(const TrainLog& log, const ExperimentConfig& config,
                 const std::string& dir) {
  const std::filesystem::path root(dir);
  WriteFileAtomic((root / "train.csv").string(), TrainCsv(log));
  WriteFileAtomic((root / "config.resolved").string(), ConfigToString(config));
  WriteFileAtomic((root / "curves.svg").string(),
                  CurvesSvg(log, VariantName(config.variant) + ", seed " +
                                     std::to_string(config.seed)));
}

RunSummary Summarize(const Trainer& trainer) {
  RunSummary s;
  s.variant = VariantName(trainer.config().variant);
  s.seed = trainer.config().seed;
  s.env_steps = trainer.env_step();
  for (const TrainLogRow& r : trainer.log().rows) {
    if (r.eval_success < 0.0) continue;
    s.final_eval_success = r.eval_success;
    s.best_eval_success = std::max(s.best_eval_success, r.eval_success);
  }
  const std::vector<double>& drifts = trainer.probe_drifts();
  if (!drifts.empty()) {
    double total = 0.0;
    for (double d : drifts) total += d;
    s.mean_probe_drift = total / static_cast<double>(drifts.size());
  }
  if (trainer.label_stats().labels > 0) {
    s.label_informative_fraction = trainer.label_stats().fraction();
  }
  return s;
}

std::string ComparisonCsv(const std::vector<RunSummary>& runs) {
  std::string out =
      "variant,seed,env_steps,final_eval_success,best_eval_success,"
      "mean_probe_drift,label_informative_fraction\n";
  for (const RunSummary& r : runs) {
    out += r.variant + ',' + std::to_string(r.seed) + ',' +
           std::to_string(r.env_steps) + ',' + Num(r.final_eval_success) +
           ',' + Num(r.best_eval_success) + ',' + Num(r.mean_probe_drift) +
           ',' + Num(r.label_informative_fraction) + '\n';
  }
  return out;
}

}  // namespace piper
