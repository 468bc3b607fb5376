// enctap/experiments/config.h

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

#ifndef ENCTAP_EXPERIMENTS_CONFIG_H_
#define ENCTAP_EXPERIMENTS_CONFIG_H_

#include <yaml-cpp/yaml.h>

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "enctap/base/error.h"
#include "enctap/data/synth.h"
#include "enctap/frontend/specaug.h"
#include "enctap/nnet/config.h"
#include "enctap/transfer/transfer.h"

namespace enctap {

enum class RunMode { kBaseline, kVanilla, kTap, kDirect };

inline const char *ModeName(RunMode m) {
  switch (m) {
    case RunMode::kBaseline: return "baseline";
    case RunMode::kVanilla: return "vanilla";
    case RunMode::kTap: return "tap";
    case RunMode::kDirect: return "direct";
  }
  return "?";
}

inline RunMode ParseMode(const std::string &s) {
  if (s == "baseline") return RunMode::kBaseline;
  if (s == "vanilla") return RunMode::kVanilla;
  if (s == "tap") return RunMode::kTap;
  if (s == "direct") return RunMode::kDirect;
  throw ParseError(StrCat("unknown mode '", s, "' (expected baseline|vanilla|tap|direct)"));
}

/// Where utterances come from: either a synthetic fixture ("source" or
/// "target") or manifest files.
struct DataConfig {
  std::string fixture = "target";
  uint64_t corpus_seed = 20261017;
  FixtureSizes sizes;
  std::string train_manifest, dev_manifest, test_manifest;

  bool UsesFixture() const { return train_manifest.empty(); }
};

struct FrontendConfig {
  int n_mels = 80;
  bool pitch = false;
  bool mean_norm = true;
  SpecAugPolicy specaug{8, 10, 2, 2, 0.0f};  // input masking, train only

  int FeatureDim() const { return n_mels + (pitch ? 3 : 0); }

  void ToKv(const std::string &prefix, KeyValues *kv) const {
    using internal::PutKv;
    PutKv(kv, prefix + "n_mels", n_mels);
    PutKv(kv, prefix + "pitch", int(pitch));
    PutKv(kv, prefix + "mean_norm", int(mean_norm));
  }
  static FrontendConfig FromKv(const std::string &prefix, const KeyValues &kv) {
    using internal::GetKv;
    FrontendConfig c;
    c.n_mels = GetKv<int>(kv, prefix + "n_mels");
    c.pitch = GetKv<int>(kv, prefix + "pitch") != 0;
    c.mean_norm = GetKv<int>(kv, prefix + "mean_norm") != 0;
    return c;
  }
};

struct OptimizerConfig {
  double peak_lr = 1e-3;
  int warmup_steps = 800;
  int total_steps = 2000;
  int batch_size = 8;
  double clip_norm = 5.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.98;
  double adam_eps = 1e-9;
};

struct DecodeConfig {
  int beam = 4;
  double ctc_weight = 0.3;
  bool char_units = true;  // CER (true) or WER
};

struct AblationConfig {
  std::vector<int> tap_k{2, 4, 6};
  std::vector<bool> freeze{true, false};
  std::vector<std::optional<SpecAugPolicy>> embed_specaug{std::nullopt};
  bool include_vanilla = true;
};

struct ExperimentConfig {
  RunMode mode = RunMode::kBaseline;
  uint64_t seed = 1;
  std::string output_dir = "run";
  DataConfig data;
  FrontendConfig frontend;
  ConformerConfig model;  // vocab_size is filled from the tokenizer
  std::optional<TransferConfig> transfer;
  OptimizerConfig optimizer;
  DecodeConfig decode;
  int log_every = 50;
  int checkpoint_every = 500;
  std::string source_checkpoint;
  // How to produce source_checkpoint when it does not exist yet.
  std::shared_ptr<ExperimentConfig> source;
  AblationConfig ablation;

  void Validate() const {
    if ((mode == RunMode::kVanilla || mode == RunMode::kTap || mode == RunMode::kDirect) &&
        source_checkpoint.empty() && !source)
      throw InvalidInput(StrCat(ModeName(mode), " mode needs source_checkpoint"));
    if (mode == RunMode::kTap && !transfer) throw InvalidInput("tap mode needs a transfer section");
    if (optimizer.batch_size < 1 || optimizer.total_steps < 0 || optimizer.warmup_steps < 1)
      throw InvalidInput("bad optimizer settings");
    if (model.input_dim != frontend.FeatureDim())
      throw InvalidInput(StrCat("model.input_dim ", model.input_dim, " != feature dim ", frontend.FeatureDim()));
    if (decode.beam < 1) throw InvalidInput("decode.beam must be >= 1");
    frontend.specaug.Validate();
  }
};

/// "FxT" (e.g. "20x10") or "none".
inline std::optional<SpecAugPolicy> ParseSpecAugWidths(const std::string &text) {
  if (text == "none" || text.empty()) return std::nullopt;
  size_t x = text.find_first_of("xX");
  SpecAugPolicy p;
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    size_t used = 0;
    p.freq_mask_width = std::stoi(text.substr(0, x), &used);
    if (used != x) throw std::invalid_argument(text);
    p.time_mask_width = std::stoi(text.substr(x + 1), &used);
    if (used != text.size() - x - 1) throw std::invalid_argument(text);
  } catch (const std::exception &) {
    throw ParseError(StrCat("bad SpecAug widths '", text, "' (expected FxT or none)"));
  }
  p.Validate();
  return p;
}

namespace internal {

template <typename T>
void Read(const YAML::Node &node, const char *key, T *out) {
  if (!node[key]) return;
  try {
    *out = node[key].as<T>();
  } catch (const YAML::Exception &e) {
    throw ParseError(StrCat("config key '", key, "': ", e.what()));
  }
}

inline void ReadSpecAug(const YAML::Node &node, SpecAugPolicy *p) {
  if (node.IsScalar()) {
    auto parsed = ParseSpecAugWidths(node.as<std::string>());
    *p = parsed ? *parsed : SpecAugPolicy{0, 0, 0, 0, 0.0f};
    return;
  }
  Read(node, "F", &p->freq_mask_width);
  Read(node, "T", &p->time_mask_width);
  Read(node, "num_freq_masks", &p->num_freq_masks);
  Read(node, "num_time_masks", &p->num_time_masks);
  Read(node, "mask_value", &p->mask_value);
  p->Validate();
}

inline void ReadModel(const YAML::Node &n, ConformerConfig *c) {
  if (!n) return;
  Read(n, "input_dim", &c->input_dim);
  Read(n, "d_model", &c->d_model);
  Read(n, "num_encoder_layers", &c->num_encoder_layers);
  Read(n, "encoder_ff_units", &c->encoder_ff_units);
  Read(n, "num_decoder_layers", &c->num_decoder_layers);
  Read(n, "decoder_ff_units", &c->decoder_ff_units);
  Read(n, "attention_heads", &c->attention_heads);
  Read(n, "conv_kernel", &c->conv_kernel);
  Read(n, "ctc_weight", &c->ctc_weight);
  Read(n, "dropout", &c->dropout);
  Read(n, "label_smoothing", &c->label_smoothing);
}

inline ExperimentConfig ParseExperiment(const YAML::Node &root) {
  if (!root.IsMap()) throw ParseError("experiment config must be a mapping");
  ExperimentConfig c;
  if (root["mode"]) c.mode = ParseMode(root["mode"].as<std::string>());
  Read(root, "seed", &c.seed);
  Read(root, "output_dir", &c.output_dir);
  Read(root, "log_every", &c.log_every);
  Read(root, "checkpoint_every", &c.checkpoint_every);
  Read(root, "source_checkpoint", &c.source_checkpoint);
  if (auto d = root["data"]) {
    Read(d, "fixture", &c.data.fixture);
    Read(d, "corpus_seed", &c.data.corpus_seed);
    Read(d, "train", &c.data.train_manifest);
    Read(d, "dev", &c.data.dev_manifest);
    Read(d, "test", &c.data.test_manifest);
    Read(d, "source_train_size", &c.data.sizes.source_train);
    Read(d, "source_test_size", &c.data.sizes.source_test);
    Read(d, "target_train_size", &c.data.sizes.target_train);
    Read(d, "target_dev_size", &c.data.sizes.target_dev);
    Read(d, "target_test_size", &c.data.sizes.target_test);
    if (c.data.fixture != "source" && c.data.fixture != "target")
      throw ParseError(StrCat("data.fixture must be source or target, got '", c.data.fixture, "'"));
  }
  if (auto f = root["frontend"]) {
    Read(f, "n_mels", &c.frontend.n_mels);
    Read(f, "pitch", &c.frontend.pitch);
    Read(f, "mean_norm", &c.frontend.mean_norm);
    if (f["specaug"]) ReadSpecAug(f["specaug"], &c.frontend.specaug);
  }
  c.model.input_dim = c.frontend.FeatureDim();
  ReadModel(root["model"], &c.model);
  if (auto t = root["transfer"]) {
    TransferConfig tc;
    Read(t, "tap_layer_K", &tc.tap_layer_K);
    Read(t, "freeze_prefix", &tc.freeze_prefix);
    Read(t, "project_if_mismatch", &tc.project_if_mismatch);
    if (t["embed_specaug"]) {
      SpecAugPolicy p;
      ReadSpecAug(t["embed_specaug"], &p);
      if (!p.IsIdentity()) tc.embed_specaug = p;
    }
    ReadModel(t["target"], &tc.target_config);
    c.transfer = tc;
  }
  if (auto o = root["optimizer"]) {
    Read(o, "peak_lr", &c.optimizer.peak_lr);
    Read(o, "warmup_steps", &c.optimizer.warmup_steps);
    Read(o, "total_steps", &c.optimizer.total_steps);
    Read(o, "batch_size", &c.optimizer.batch_size);
    Read(o, "clip_norm", &c.optimizer.clip_norm);
  }
  if (auto d = root["decode"]) {
    Read(d, "beam", &c.decode.beam);
    Read(d, "ctc_weight", &c.decode.ctc_weight);
    if (d["unit"]) {
      std::string unit = d["unit"].as<std::string>();
      if (unit != "char" && unit != "word") throw ParseError(StrCat("decode.unit must be char or word"));
      c.decode.char_units = unit == "char";
    }
  }
  if (auto a = root["ablation"]) {
    Read(a, "tap_k", &c.ablation.tap_k);
    Read(a, "freeze", &c.ablation.freeze);
    Read(a, "include_vanilla", &c.ablation.include_vanilla);
    if (a["embed_specaug"]) {
      c.ablation.embed_specaug.clear();
      for (const auto &item : a["embed_specaug"]) c.ablation.embed_specaug.push_back(
          ParseSpecAugWidths(item.as<std::string>()));
    }
  }
  if (auto s = root["source"]) {
    c.source = std::make_shared<ExperimentConfig>(ParseExperiment(s));
    if (c.source->mode != RunMode::kBaseline) throw ParseError("source run must be a baseline run");
  }
  return c;
}

}  // namespace internal

inline ExperimentConfig ParseExperimentConfig(const std::string &yaml_text) {
  try {
    return internal::ParseExperiment(YAML::Load(yaml_text));
  } catch (const YAML::Exception &e) {
    throw ParseError(StrCat("config: ", e.what()));
  }
}

inline ExperimentConfig LoadExperimentConfig(const std::string &path) {
  try {
    return internal::ParseExperiment(YAML::LoadFile(path));
  } catch (const YAML::BadFile &) {
    throw ParseError(StrCat("cannot read config ", path));
  } catch (const YAML::Exception &e) {
    throw ParseError(StrCat(path, ": ", e.what()));
  }
}

}  // namespace enctap

#endif  // ENCTAP_EXPERIMENTS_CONFIG_H_
