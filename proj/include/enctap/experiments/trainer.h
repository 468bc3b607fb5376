// enctap/experiments/trainer.h

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

#ifndef ENCTAP_EXPERIMENTS_TRAINER_H_
#define ENCTAP_EXPERIMENTS_TRAINER_H_

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "enctap/experiments/config.h"
#include "enctap/experiments/corpus.h"
#include "enctap/experiments/optimizer.h"
#include "enctap/transfer/transfer.h"

namespace enctap {

/// A model together with the tokenizer its output layer is sized for.
struct RunModel {
  std::unique_ptr<Recognizer<float>> model;
  Tokenizer tokenizer;
};

struct StepMetrics {
  int step = 0;
  double loss = 0, ctc = 0, att = 0, lr = 0;
};

struct TrainOptions {
  std::string resume_from;                 // checkpoint to continue from
  const CorpusSplits *data = nullptr;      // preloaded corpus (else LoadCorpus)
  int stop_at_step = -1;                   // simulate an interruption
  bool quiet = true;
  // Called after every optimizer step, while the step's gradients are
  // still attached to the parameters.
  std::function<void(int step, const Recognizer<float> &)> on_step;
};

struct TrainResult {
  RunModel run;
  std::vector<StepMetrics> history;
  std::string final_checkpoint;
};

/// Records which parameters are frozen and their checksum; verifies every
/// step that they received exactly zero gradient and did not move.
class FreezeGuard {
 public:
  explicit FreezeGuard(const ParameterSet<float> &params) {
    for (const auto &p : params.All())
      if (!p->trainable) frozen_.push_back(p.get());
    checksum_ = Hash();
  }

  void Check(int step) const {
    for (const Parameter<float> *p : frozen_) {
      if (p->grad.size() && (p->grad.array() != 0.0f).any())
        throw FreezeViolation(StrCat("step ", step, ": frozen parameter ", p->name, " received a gradient"));
    }
    if (Hash() != checksum_) throw FreezeViolation(StrCat("step ", step, ": frozen parameters changed"));
  }

  size_t NumFrozen() const { return frozen_.size(); }
  uint64_t FrozenChecksum() const { return checksum_; }

 private:
  uint64_t Hash() const {
    uint64_t h = Fnv1a(nullptr, 0);
    for (const Parameter<float> *p : frozen_) h = Checksum(p->value, Fnv1a(p->name.data(), p->name.size(), h));
    return h;
  }

  std::vector<const Parameter<float> *> frozen_;
  uint64_t checksum_ = 0;
};

inline std::string FinalCheckpointPath(const std::string &output_dir) { return output_dir + "/final.ckpt"; }

namespace internal {

inline void AddRunHeader(const ExperimentConfig &config, Checkpoint *ckpt) {
  ckpt->header["run.mode"] = ModeName(config.mode);
  ckpt->header["run.seed"] = std::to_string(config.seed);
  config.frontend.ToKv("frontend.", &ckpt->header);
}

}  // namespace internal

inline std::string EnsureSourceCheckpoint(const ExperimentConfig &config, bool quiet = true);

/// Fresh model for `config` (weights random or copied from the source,
/// depending on the mode).
inline RunModel BuildRunModel(const ExperimentConfig &config, const std::vector<Utterance> &train,
                              const std::string &source_path = "") {
  const uint64_t init_seed = DeriveSeed(config.seed, {0x1417});
  RunModel r;
  if (config.mode == RunMode::kBaseline) {
    r.tokenizer = Tokenizer::Build(Transcripts(train));
    ConformerConfig mc = config.model;
    mc.vocab_size = r.tokenizer.Size();
    r.model = std::make_unique<AsrModel<float>>(mc, init_seed);
    return r;
  }
  Checkpoint source = LoadCheckpoint(source_path.empty() ? config.source_checkpoint : source_path);
  if (config.mode == RunMode::kVanilla) {
    r.tokenizer = Tokenizer::FromSymbols(source.vocabulary);
    auto model = std::make_unique<AsrModel<float>>(SourceConfigOf(source), init_seed);
    VanillaInit(source, model.get());
    r.model = std::move(model);
  } else if (config.mode == RunMode::kTap) {
    r.tokenizer = Tokenizer::Build(Transcripts(train));
    TransferConfig tc = *config.transfer;
    tc.target_config.vocab_size = r.tokenizer.Size();
    r.model = Compose(*TapPrefix<float>(source, tc.tap_layer_K), tc, init_seed);
  } else {
    r.tokenizer = Tokenizer::FromSymbols(source.vocabulary);
    r.model = DirectDecodeModel<float>(source);
  }
  return r;
}

/// Joint-loss training with Adam and the warmup schedule. Writes
/// metrics.csv, periodic ckpt-<step>.bin and final.ckpt under output_dir.
inline TrainResult Train(const ExperimentConfig &config, const TrainOptions &opts = {}) {
  config.Validate();
  if (config.mode == RunMode::kDirect)
    throw InvalidInput("direct mode has no training stage; evaluate the source checkpoint instead");
  namespace fs = std::filesystem;
  fs::create_directories(config.output_dir);

  CorpusSplits loaded;
  const CorpusSplits &data = opts.data ? *opts.data : (loaded = LoadCorpus(config.data));

  std::string source_path;
  if (config.mode != RunMode::kBaseline) source_path = EnsureSourceCheckpoint(config, opts.quiet);

  TrainResult result;
  Adam adam(config.optimizer);
  int start_step = 0;
  if (!opts.resume_from.empty()) {
    Checkpoint ckpt = LoadCheckpoint(opts.resume_from);
    if (!(FrontendConfig::FromKv("frontend.", ckpt.header).FeatureDim() == config.frontend.FeatureDim()))
      throw IncompatibleArchitecture("resume checkpoint frontend differs from the config");
    result.run.model = LoadRecognizer<float>(ckpt);
    result.run.tokenizer = Tokenizer::FromSymbols(ckpt.vocabulary);
    adam.Load(ckpt.optimizer_state);
    start_step = static_cast<int>(ckpt.step);
  } else {
    result.run = BuildRunModel(config, data.train, source_path);
  }
  Recognizer<float> &model = *result.run.model;
  ParameterSet<float> &params = model.Params();
  const std::vector<Example> examples = MakeExamples(data.train, config.frontend, result.run.tokenizer);
  std::vector<int> lengths;
  for (const auto &ex : examples) lengths.push_back(static_cast<int>(ex.feats.rows()));
  BatchSchedule schedule(lengths, config.optimizer.batch_size, DeriveSeed(config.seed, {0xDA7A}));
  FreezeGuard guard(params);

  auto save = [&](const std::string &path, int step) {
    Checkpoint ckpt = MakeCheckpoint(model, result.run.tokenizer, static_cast<uint64_t>(step));
    internal::AddRunHeader(config, &ckpt);
    adam.Save(&ckpt.optimizer_state);
    SaveCheckpoint(ckpt, path);
  };

  const std::string metrics_path = config.output_dir + "/metrics.csv";
  std::ofstream metrics(metrics_path, start_step > 0 ? std::ios::app : std::ios::trunc);
  if (!metrics) throw Error(StrCat("cannot write ", metrics_path));
  if (start_step == 0) metrics << "step,loss,ctc,att,lr\n";

  const int total = config.optimizer.total_steps;
  const int end = opts.stop_at_step >= 0 ? std::min(total, opts.stop_at_step) : total;
  const double dropout = model.HeadConfig().dropout;
  for (int step = start_step + 1; step <= end; ++step) {
    const std::vector<int> &batch = schedule.Batch(step - 1);
    Graph<float> g(/*grad_enabled=*/true);
    Rng rng(DeriveSeed(config.seed, {static_cast<uint64_t>(step), 1}));
    ForwardContext ctx{true, &rng, dropout};
    std::vector<Var<float>> totals;
    double ctc_sum = 0, att_sum = 0;
    try {
      for (size_t i = 0; i < batch.size(); ++i) {
        const Example &ex = examples[batch[i]];
        MatrixF feats = ApplySpecAug<float>(ex.feats, config.frontend.specaug,
                                            DeriveSeed(config.seed, {static_cast<uint64_t>(step), i, 2}));
        LossParts<float> parts = model.Loss(g, feats, ex.tokens, ctx);
        totals.push_back(parts.total);
        ctc_sum += parts.ctc.scalar();
        att_sum += parts.att.scalar();
      }
    } catch (const NumericalFailure &e) {
      throw NumericalFailure(StrCat("step ", step, ": ", e.what()));
    }
    Var<float> loss = ag::WeightedSum(totals, std::vector<float>(totals.size(), 1.0f / totals.size()));
    if (!std::isfinite(loss.scalar()))
      throw NumericalFailure(StrCat("non-finite training loss at step ", step, " (", loss.scalar(), ")"));
    params.ZeroGrad();
    g.Backward(loss);
    adam.Step(params, step);
    guard.Check(step);

    StepMetrics m{step, loss.scalar(), ctc_sum / batch.size(), att_sum / batch.size(),
                  NoamLearningRate(config.optimizer, step)};
    result.history.push_back(m);
    if (step % config.log_every == 0 || step == end) {
      metrics << m.step << ',' << m.loss << ',' << m.ctc << ',' << m.att << ',' << m.lr << '\n';
      if (!opts.quiet)
        std::fprintf(stderr, "[%s] step %d loss %.4f (ctc %.4f att %.4f) lr %.2e\n", config.output_dir.c_str(), step,
                     m.loss, m.ctc, m.att, m.lr);
    }
    if (opts.on_step) opts.on_step(step, model);
    if (config.checkpoint_every > 0 && step % config.checkpoint_every == 0 && step != total)
      save(StrCat(config.output_dir, "/ckpt-", step, ".bin"), step);
  }
  metrics.flush();
  if (!metrics) throw Error(StrCat("write failed: ", metrics_path));
  if (end == total) {
    result.final_checkpoint = FinalCheckpointPath(config.output_dir);
    save(result.final_checkpoint, total);
  } else {
    result.final_checkpoint = StrCat(config.output_dir, "/ckpt-", end, ".bin");
    save(result.final_checkpoint, end);
  }
  return result;
}

/// Path of the source checkpoint a transfer run needs, training it from
/// `config.source` first when it does not exist yet.
inline std::string EnsureSourceCheckpoint(const ExperimentConfig &config, bool quiet) {
  std::string path = config.source_checkpoint;
  if (path.empty() && config.source) path = FinalCheckpointPath(config.source->output_dir);
  if (std::filesystem::exists(path)) return path;
  if (!config.source) throw LoadError(StrCat("source checkpoint ", path, " does not exist"));
  TrainOptions opts;
  opts.quiet = quiet;
  TrainResult r = Train(*config.source, opts);
  if (r.final_checkpoint != path) std::filesystem::copy_file(r.final_checkpoint, path,
                                                             std::filesystem::copy_options::overwrite_existing);
  return path;
}

}  // namespace enctap

#endif  // ENCTAP_EXPERIMENTS_TRAINER_H_
