// tools/enctap.cc

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

// Command-line front end: gen-data, train, evaluate, ablate, report.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "enctap/data/manifest.h"
#include "enctap/data/synth.h"
#include "enctap/experiments/ablate.h"
#include "enctap/experiments/config.h"
#include "enctap/experiments/evaluate.h"
#include "enctap/experiments/report.h"
#include "enctap/experiments/trainer.h"

namespace {

using namespace enctap;

struct Overrides {
  std::optional<int> tap_k;
  std::optional<std::string> freeze;
  std::optional<std::string> embed_specaug;
  std::optional<uint64_t> seed;
  std::optional<int> beam;
};

void AddCommon(CLI::App *cmd, std::string *config_path, Overrides *o) {
  cmd->add_option("--config", *config_path, "experiment config (YAML)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--tap-k", o->tap_k, "number of tapped source encoder layers");
  cmd->add_option("--freeze", o->freeze, "freeze the tapped prefix (true|false)");
  cmd->add_option("--embed-specaug", o->embed_specaug, "embedding SpecAug widths FxT, or none");
  cmd->add_option("--seed", o->seed, "run seed");
  cmd->add_option("--beam", o->beam, "decoding beam size");
}

bool ParseBool(const std::string &s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ParseError("--freeze expects true or false, got '" + s + "'");
}

ExperimentConfig Load(const std::string &path, const Overrides &o) {
  ExperimentConfig c = LoadExperimentConfig(path);
  bool transfer_override = o.tap_k || o.freeze || o.embed_specaug;
  if (transfer_override && !c.transfer) c.transfer = TransferConfig{};
  if (o.tap_k) {
    c.transfer->tap_layer_K = *o.tap_k;
    c.ablation.tap_k = {*o.tap_k};
  }
  if (o.freeze) {
    c.transfer->freeze_prefix = ParseBool(*o.freeze);
    c.ablation.freeze = {c.transfer->freeze_prefix};
  }
  if (o.embed_specaug) {
    auto p = ParseSpecAugWidths(*o.embed_specaug);
    c.transfer->embed_specaug = p;
    c.ablation.embed_specaug = {p};
  }
  if (o.seed) c.seed = *o.seed;
  if (o.beam) c.decode.beam = *o.beam;
  return c;
}

int GenData(const ExperimentConfig &c) {
  namespace fs = std::filesystem;
  struct Split {
    FixtureSplit split;
    int size;
    const char *name;
  };
  const FixtureSizes &n = c.data.sizes;
  const Split splits[] = {{FixtureSplit::kSourceTrain, n.source_train, "src-train"},
                          {FixtureSplit::kSourceTest, n.source_test, "src-test"},
                          {FixtureSplit::kTargetTrain, n.target_train, "tgt-train"},
                          {FixtureSplit::kTargetDev, n.target_dev, "tgt-dev"},
                          {FixtureSplit::kTargetTest, n.target_test, "tgt-test"}};
  for (const Split &s : splits) {
    fs::path dir = fs::path(c.output_dir) / s.name;
    fs::create_directories(dir);
    std::vector<Utterance> utts = FixtureCorpus(s.split, s.size, c.data.corpus_seed);
    for (auto &u : utts) {
      u.audio_path = (dir / (u.utt_id + ".wav")).string();
      WriteWav(u.audio_path, u.pcm);
      u.audio_path = std::string(s.name) + "/" + u.utt_id + ".wav";
    }
    std::string manifest = (fs::path(c.output_dir) / (std::string(s.name) + ".tsv")).string();
    WriteManifest(manifest, utts);
    std::printf("%s: %zu utterances -> %s\n", s.name, utts.size(), manifest.c_str());
  }
  return 0;
}

int TrainCmd(const ExperimentConfig &c, const std::string &resume) {
  TrainOptions opts;
  opts.resume_from = resume;
  opts.quiet = false;
  TrainResult r = Train(c, opts);
  std::printf("final checkpoint: %s\n", r.final_checkpoint.c_str());
  if (!r.history.empty()) std::printf("final loss: %.4f\n", r.history.back().loss);
  return 0;
}

int EvaluateCmd(const ExperimentConfig &c, std::string checkpoint, const std::string &split) {
  if (checkpoint.empty())
    checkpoint = c.mode == RunMode::kDirect ? EnsureSourceCheckpoint(c, false) : FinalCheckpointPath(c.output_dir);
  CorpusSplits data = LoadCorpus(c.data);
  const std::vector<Utterance> *utts = nullptr;
  if (split == "dev") utts = &data.dev;
  else if (split == "test") utts = &data.test;
  else if (split == "train") utts = &data.train;
  else throw InvalidInput("--split must be train, dev or test");
  if (utts->empty()) throw InvalidInput("split '" + split + "' has no utterances");
  EvalOutput out = EvaluateCheckpoint(checkpoint, *utts, c.decode);
  std::string prefix = c.output_dir + "/eval-" + split;
  WriteEvalOutput(out, prefix);
  std::printf("%s %s: %.2f%% (S=%d D=%d I=%d over %d tokens) -> %s.csv\n", c.decode.char_units ? "CER" : "WER",
              split.c_str(), out.report.ErrorRate(), out.report.counts.substitutions, out.report.counts.deletions,
              out.report.counts.insertions, out.report.ref_tokens, prefix.c_str());
  return 0;
}

int AblateCmd(const ExperimentConfig &c) {
  std::vector<ResultRow> rows = Ablate(c, /*quiet=*/false);
  std::cout << RenderMarkdown(rows);
  for (const auto &r : rows)
    if (!r.note.empty()) return 2;  // some cells failed
  return 0;
}

int ReportCmd(const ExperimentConfig &c, std::string results) {
  if (results.empty()) results = c.output_dir + "/results.csv";
  std::vector<ResultRow> rows = ReadResultsCsv(results);
  AddRelativeImprovement(&rows);
  std::string md = RenderMarkdown(rows);
  std::ofstream(c.output_dir + "/report.md") << md;
  WriteResultsCsv(rows, c.output_dir + "/report.csv");
  std::cout << md;
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"enctap: encoder-tap transfer learning for Conformer ASR"};
  app.require_subcommand(1);
  std::string config_path, resume, checkpoint, split = "test", results;
  Overrides o;
  auto *gen = app.add_subcommand("gen-data", "write the synthetic fixtures as WAV files + manifests");
  auto *train = app.add_subcommand("train", "train a model (baseline, vanilla or tap mode)");
  auto *eval = app.add_subcommand("evaluate", "decode a split and score it");
  auto *ablate = app.add_subcommand("ablate", "run the (K, freeze, SpecAug) grid");
  auto *report = app.add_subcommand("report", "render results.csv with relative improvements");
  for (auto *cmd : {gen, train, eval, ablate, report}) AddCommon(cmd, &config_path, &o);
  train->add_option("--resume", resume, "checkpoint to resume from")->check(CLI::ExistingFile);
  eval->add_option("--checkpoint", checkpoint, "checkpoint (default: <output_dir>/final.ckpt)");
  eval->add_option("--split", split, "train|dev|test");
  report->add_option("--results", results, "results CSV (default: <output_dir>/results.csv)");
  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig c = Load(config_path, o);
    if (*gen) return GenData(c);
    if (*train) return TrainCmd(c, resume);
    if (*eval) return EvaluateCmd(c, checkpoint, split);
    if (*ablate) return AblateCmd(c);
    if (*report) return ReportCmd(c, results);
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
