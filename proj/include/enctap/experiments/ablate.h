// enctap/experiments/ablate.h

// Copyright 2026 The enctap Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ENCTAP_EXPERIMENTS_ABLATE_H_
#define ENCTAP_EXPERIMENTS_ABLATE_H_

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "enctap/experiments/evaluate.h"
#include "enctap/experiments/report.h"
#include "enctap/experiments/trainer.h"

namespace enctap {

inline ResultRow MakeRow(const std::string &mode, int tap_k = 0, bool freeze = false) {
  ResultRow r;
  r.mode = mode;
  r.tap_k = tap_k;
  r.freeze = freeze;
  return r;
}

/// Name of the output subdirectory of one grid cell.
inline std::string CellName(const ResultRow &r) {
  if (r.mode != "tap") return r.mode;
  std::string s = StrCat("tap-k", r.tap_k, r.freeze ? "-frozen" : "-updated");
  if (r.specaug_f || r.specaug_t) s += StrCat("-sa", r.specaug_f, "x", r.specaug_t);
  return s;
}

/// Trains and evaluates one run on preloaded data, filling the row's
/// error rates. Failures propagate.
inline void RunCell(const ExperimentConfig &config, const CorpusSplits &data, ResultRow *row, bool quiet) {
  TrainOptions opts;
  opts.data = &data;
  opts.quiet = quiet;
  RunModel run;
  if (config.mode == RunMode::kDirect) {
    run = BuildRunModel(config, data.train, EnsureSourceCheckpoint(config, quiet));
  } else {
    run = Train(config, opts).run;
  }
  EvalOutput dev = EvaluateModel(*run.model, run.tokenizer, config.frontend, data.dev, config.decode);
  EvalOutput test = EvaluateModel(*run.model, run.tokenizer, config.frontend, data.test, config.decode);
  WriteEvalOutput(dev, config.output_dir + "/dev");
  WriteEvalOutput(test, config.output_dir + "/test");
  row->dev_wer = dev.report.ErrorRate();
  row->test_wer = test.report.ErrorRate();
}

/// Baseline, optional vanilla transfer and every (K, freeze, embedding
/// SpecAug) tap cell, all from the same seed and data order. A failing
/// cell is recorded in its row's note and the sweep continues. Writes
/// results.csv under base.output_dir.
inline std::vector<ResultRow> Ablate(const ExperimentConfig &base, bool quiet = true) {
  namespace fs = std::filesystem;
  fs::create_directories(base.output_dir);
  const CorpusSplits data = LoadCorpus(base.data);

  ExperimentConfig shared = base;
  shared.source_checkpoint = EnsureSourceCheckpoint(base, quiet);
  const int source_depth = SourceConfigOf(LoadCheckpoint(shared.source_checkpoint)).num_encoder_layers;

  std::vector<std::pair<ResultRow, ExperimentConfig>> cells;
  auto add = [&](ResultRow row, RunMode mode) {
    ExperimentConfig c = shared;
    c.mode = mode;
    if (mode == RunMode::kTap) {
      TransferConfig tc = base.transfer.value_or(TransferConfig{});
      tc.tap_layer_K = row.tap_k;
      tc.freeze_prefix = row.freeze;
      tc.embed_specaug.reset();
      if (row.specaug_f || row.specaug_t) {
        SpecAugPolicy p = base.transfer && base.transfer->embed_specaug ? *base.transfer->embed_specaug
                                                                        : SpecAugPolicy{};
        p.freq_mask_width = row.specaug_f;
        p.time_mask_width = row.specaug_t;
        tc.embed_specaug = p;
      }
      c.transfer = tc;
    }
    c.output_dir = base.output_dir + "/" + CellName(row);
    cells.emplace_back(row, c);
  };
  add(MakeRow("baseline"), RunMode::kBaseline);
  if (base.ablation.include_vanilla) add(MakeRow("vanilla"), RunMode::kVanilla);
  for (bool freeze : base.ablation.freeze)
    for (const auto &sa : base.ablation.embed_specaug)
      for (int k : base.ablation.tap_k) {
        ResultRow r = MakeRow("tap", k, freeze);
        if (sa) {
          r.specaug_f = sa->freq_mask_width;
          r.specaug_t = sa->time_mask_width;
        }
        add(r, RunMode::kTap);
      }

  std::vector<ResultRow> rows;
  for (auto &[row, config] : cells) {
    try {
      if (row.mode == "tap" && (row.tap_k < 1 || row.tap_k > source_depth))
        throw InvalidInput(StrCat("K=", row.tap_k, " outside source depth ", source_depth));
      RunCell(config, data, &row, quiet);
    } catch (const std::exception &e) {
      row.note = StrCat("failed: ", e.what());
    }
    if (!quiet)
      std::fprintf(stderr, "[ablate] %s dev %.2f test %.2f %s\n", CellName(row).c_str(), row.dev_wer, row.test_wer,
                   row.note.c_str());
    rows.push_back(row);
    WriteResultsCsv(rows, base.output_dir + "/results.csv");  // partial results survive a crash
  }
  if (!std::isnan(rows.front().test_wer)) AddRelativeImprovement(&rows);
  WriteResultsCsv(rows, base.output_dir + "/results.csv");
  return rows;
}

}  // namespace enctap

#endif  // ENCTAP_EXPERIMENTS_ABLATE_H_
