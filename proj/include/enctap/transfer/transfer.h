// enctap/transfer/transfer.h

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

#ifndef ENCTAP_TRANSFER_TRANSFER_H_
#define ENCTAP_TRANSFER_TRANSFER_H_

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "enctap/base/error.h"
#include "enctap/base/random.h"
#include "enctap/data/tokenizer.h"
#include "enctap/frontend/specaug.h"
#include "enctap/nnet/checkpoint.h"
#include "enctap/nnet/model.h"

namespace enctap {

struct TransferConfig {
  int tap_layer_K = 6;
  bool freeze_prefix = true;
  std::optional<SpecAugPolicy> embed_specaug;
  // Target encoder depth is target_config.num_encoder_layers; its
  // input_dim is ignored (the target has no subsampling stem).
  ConformerConfig target_config = DefaultTarget();
  // When dims match, true inserts an identity-initialized trainable
  // projection; when they differ it must be true.
  bool project_if_mismatch = false;

  static ConformerConfig DefaultTarget() {
    ConformerConfig c;
    c.num_encoder_layers = 4;
    return c;
  }

  void Validate(const ConformerConfig &source) const {
    if (tap_layer_K < 1 || tap_layer_K > source.num_encoder_layers)
      throw InvalidInput(StrCat("tap_layer_K ", tap_layer_K, " outside [1, ", source.num_encoder_layers, "]"));
    ConformerConfig t = target_config;
    t.input_dim = t.d_model;
    t.Validate();
    if (embed_specaug) embed_specaug->Validate();
  }

  void ToKv(const std::string &prefix, KeyValues *kv) const {
    using internal::PutKv;
    PutKv(kv, prefix + "tap_layer_K", tap_layer_K);
    PutKv(kv, prefix + "freeze_prefix", int(freeze_prefix));
    PutKv(kv, prefix + "project_if_mismatch", int(project_if_mismatch));
    PutKv(kv, prefix + "embed_specaug", int(embed_specaug.has_value()));
    if (embed_specaug) {
      PutKv(kv, prefix + "embed_specaug.F", embed_specaug->freq_mask_width);
      PutKv(kv, prefix + "embed_specaug.T", embed_specaug->time_mask_width);
      PutKv(kv, prefix + "embed_specaug.num_freq_masks", embed_specaug->num_freq_masks);
      PutKv(kv, prefix + "embed_specaug.num_time_masks", embed_specaug->num_time_masks);
      PutKv(kv, prefix + "embed_specaug.mask_value", embed_specaug->mask_value);
    }
    target_config.ToKv(prefix + "target.", kv);
  }

  static TransferConfig FromKv(const std::string &prefix, const KeyValues &kv) {
    using internal::GetKv;
    TransferConfig c;
    c.tap_layer_K = GetKv<int>(kv, prefix + "tap_layer_K");
    c.freeze_prefix = GetKv<int>(kv, prefix + "freeze_prefix") != 0;
    c.project_if_mismatch = GetKv<int>(kv, prefix + "project_if_mismatch") != 0;
    if (GetKv<int>(kv, prefix + "embed_specaug")) {
      SpecAugPolicy p;
      p.freq_mask_width = GetKv<int>(kv, prefix + "embed_specaug.F");
      p.time_mask_width = GetKv<int>(kv, prefix + "embed_specaug.T");
      p.num_freq_masks = GetKv<int>(kv, prefix + "embed_specaug.num_freq_masks");
      p.num_time_masks = GetKv<int>(kv, prefix + "embed_specaug.num_time_masks");
      p.mask_value = GetKv<float>(kv, prefix + "embed_specaug.mask_value");
      c.embed_specaug = p;
    }
    c.target_config = ConformerConfig::FromKv(prefix + "target.", kv);
    return c;
  }
};

namespace internal {

inline void RequireKind(const Checkpoint &ckpt, const std::string &kind) {
  auto it = ckpt.header.find("model.kind");
  if (it == ckpt.header.end()) throw LoadError("checkpoint header lacks model.kind");
  if (it->second != kind) throw LoadError(StrCat("expected a '", kind, "' checkpoint, found '", it->second, "'"));
}

/// Copies checkpoint arrays named `from_prefix`+rest into parameters named
/// `to_prefix`+rest, for every parameter under `to_prefix`.
template <typename Real>
void CopyRenamed(const Checkpoint &ckpt, const std::string &from_prefix, const std::string &to_prefix,
                 ParameterSet<Real> *params) {
  for (auto &p : params->All()) {
    if (p->name.compare(0, to_prefix.size(), to_prefix) != 0) continue;
    std::string source_name = from_prefix + p->name.substr(to_prefix.size());
    const MatrixF *m = ckpt.FindParam(source_name);
    if (!m) throw IncompatibleArchitecture(StrCat("source checkpoint lacks ", source_name));
    if (m->rows() != p->value.rows() || m->cols() != p->value.cols())
      throw IncompatibleArchitecture(StrCat(source_name, " has shape ", m->rows(), "x", m->cols()));
    p->value = m->template cast<Real>();
  }
}

}  // namespace internal

/// Builds the model a checkpoint of kind "asr" describes (random weights).
inline ConformerConfig SourceConfigOf(const Checkpoint &ckpt) {
  internal::RequireKind(ckpt, "asr");
  return ConformerConfig::FromKv("model.", ckpt.header);
}

/// Stem plus the bottom K blocks of a source encoder, as a standalone
/// feature extractor. Parameters are named "extractor.*".
template <typename Real>
class FeatureExtractor {
 public:
  FeatureExtractor(const ConformerConfig &source, int depth, uint64_t seed) : source_(source), depth_(depth) {
    Rng rng(seed);
    encoder_ = std::make_unique<ConformerEncoder<Real>>(&params_, "extractor", source, depth, /*with_stem=*/true, rng);
  }
  FeatureExtractor(const FeatureExtractor &) = delete;
  FeatureExtractor &operator=(const FeatureExtractor &) = delete;

  /// Eval-mode K-th layer embeddings (T' x d_model) of `feats`.
  Matrix<Real> operator()(const Matrix<Real> &feats) const {
    Graph<Real> g(/*grad_enabled=*/false);
    return encoder_->Forward(g.Input(feats), ForwardContext{}).value();
  }

  int Depth() const { return depth_; }
  const ConformerConfig &SourceConfig() const { return source_; }
  ParameterSet<Real> &Params() { return params_; }
  const ParameterSet<Real> &Params() const { return params_; }

 private:
  ConformerConfig source_;
  int depth_;
  ParameterSet<Real> params_;
  std::unique_ptr<ConformerEncoder<Real>> encoder_;
};

/// The bottom K encoder blocks (and the stem) of a source checkpoint,
/// copied bit-exactly. Layers above K and the decoder are not loaded.
template <typename Real>
std::unique_ptr<FeatureExtractor<Real>> TapPrefix(const Checkpoint &source, int K) {
  ConformerConfig config = SourceConfigOf(source);
  if (K < 1 || K > config.num_encoder_layers)
    throw InvalidInput(StrCat("tap depth K=", K, " outside [1, ", config.num_encoder_layers, "]"));
  auto extractor = std::make_unique<FeatureExtractor<Real>>(config, K, 0);
  internal::CopyRenamed(source, "encoder.", "extractor.", &extractor->Params());
  return extractor;
}

/// Tapped extractor -> embedding SpecAug -> optional bridge -> stemless
/// target encoder -> fresh CTC/attention head. Parameters are
/// "extractor.*", "bridge.*" and "target.*".
template <typename Real>
class TransferModel : public Recognizer<Real> {
 public:
  /// Every part gets its own seed stream, so target-side initial weights
  /// do not depend on the tap depth or on whether a bridge exists.
  TransferModel(const ConformerConfig &source, const TransferConfig &config, uint64_t seed)
      : source_(source), config_(config) {
    config.Validate(source);
    ConformerConfig target = config.target_config;
    target.input_dim = target.d_model;
    config_.target_config = target;
    Rng extractor_rng(DeriveSeed(seed, {1})), bridge_rng(DeriveSeed(seed, {2})), target_rng(DeriveSeed(seed, {3})),
        head_rng(DeriveSeed(seed, {4}));
    extractor_ = std::make_unique<ConformerEncoder<Real>>(&this->params_, "extractor", source, config.tap_layer_K,
                                                          /*with_stem=*/true, extractor_rng);
    if (source.d_model != target.d_model) {
      if (!config.project_if_mismatch)
        throw IncompatibleArchitecture(StrCat("tapped embeddings are ", source.d_model, "-dim but the target expects ",
                                              target.d_model, "; enable project_if_mismatch"));
      bridge_.emplace(&this->params_, "bridge.proj", source.d_model, target.d_model, bridge_rng);
    } else if (config.project_if_mismatch) {
      bridge_.emplace(&this->params_, "bridge.proj", source.d_model, target.d_model, bridge_rng);
      bridge_->weight()->value.setIdentity();
      bridge_->bias()->value.setZero();
    }
    target_ = std::make_unique<ConformerEncoder<Real>>(&this->params_, "target.encoder", target,
                                                       target.num_encoder_layers, /*with_stem=*/false, target_rng);
    this->BuildHead("target.", target, head_rng);
    ApplyFreeze();
  }

  std::string Kind() const override { return "transfer"; }

  Var<Real> Encode(Graph<Real> &g, const Matrix<Real> &feats, const ForwardContext &ctx) const override {
    // A frozen extractor is a fixed feature function: no dropout inside it.
    ForwardContext extractor_ctx = config_.freeze_prefix ? ForwardContext{} : ctx;
    Var<Real> h = extractor_->Forward(g.Input(feats), extractor_ctx);
    if (config_.embed_specaug && ctx.Stochastic()) h = MaskEmbeddings(h, (*ctx.rng)());
    if (bridge_) h = (*bridge_)(h);
    return target_->Forward(h, ctx);
  }

  /// Tapped embeddings after the embedding mask (train) or unmasked (eval).
  Var<Real> MaskEmbeddings(Var<Real> h, uint64_t seed) const {
    const SpecAugPolicy &policy = *config_.embed_specaug;
    if (policy.IsIdentity()) return h;
    SpecAugPolicy keep_policy = policy;
    keep_policy.mask_value = 0.0f;
    Matrix<Real> keep = ApplySpecAug<Real>(Matrix<Real>::Ones(h.rows(), h.cols()), keep_policy, seed);
    Graph<Real> &g = *h.graph;
    Var<Real> out = ag::Mul(h, g.Constant(keep));
    if (policy.mask_value != 0.0f)
      out = ag::Add(out, g.Constant((Real(1) - keep.array()).matrix() * static_cast<Real>(policy.mask_value)));
    return out;
  }

  void ToKv(KeyValues *kv) const override {
    (*kv)["model.kind"] = Kind();
    source_.ToKv("source.", kv);
    config_.ToKv("transfer.", kv);
  }

  /// Overwrites the extractor with the tapped blocks and re-applies the
  /// freeze flag.
  void LoadExtractor(const FeatureExtractor<Real> &extractor) {
    if (extractor.Depth() != config_.tap_layer_K)
      throw InvalidInput(StrCat("extractor depth ", extractor.Depth(), " != tap_layer_K ", config_.tap_layer_K));
    if (!(extractor.SourceConfig() == source_)) throw IncompatibleArchitecture("extractor source config differs");
    for (const auto &p : extractor.Params().All()) this->params_.Find(p->name)->value = p->value;
    ApplyFreeze();
  }

  void ApplyFreeze() {
    for (auto &p : this->params_.All())
      p->trainable = !(config_.freeze_prefix && p->name.rfind(kExtractorPrefix, 0) == 0);
  }

  const TransferConfig &Config() const { return config_; }
  const ConformerConfig &SourceConfig() const { return source_; }
  bool HasBridge() const { return bridge_.has_value(); }

  static constexpr const char *kExtractorPrefix = "extractor.";

 private:
  ConformerConfig source_;
  TransferConfig config_;
  std::unique_ptr<ConformerEncoder<Real>> extractor_;
  std::optional<Linear<Real>> bridge_;
  std::unique_ptr<ConformerEncoder<Real>> target_;
};

template <typename Real>
std::unique_ptr<TransferModel<Real>> Compose(const FeatureExtractor<Real> &extractor, const TransferConfig &config,
                                             uint64_t seed) {
  if (extractor.Depth() != config.tap_layer_K)
    throw InvalidInput(StrCat("extractor depth ", extractor.Depth(), " != tap_layer_K ", config.tap_layer_K));
  auto model = std::make_unique<TransferModel<Real>>(extractor.SourceConfig(), config, seed);
  model->LoadExtractor(extractor);
  return model;
}

/// Copies every source parameter into an identically shaped target and
/// makes everything trainable.
template <typename Real>
void VanillaInit(const Checkpoint &source, AsrModel<Real> *target) {
  internal::RequireKind(source, "asr");
  ImportParams(source.params, &target->Params());
  target->SetAllTrainable(true);
}

template <typename Real>
Checkpoint MakeCheckpoint(const Recognizer<Real> &model, const Tokenizer &tokenizer, uint64_t step) {
  Checkpoint ckpt;
  model.ToKv(&ckpt.header);
  ckpt.vocabulary = tokenizer.Symbols();
  ckpt.step = step;
  ckpt.params = ExportParams(model.Params());
  return ckpt;
}

/// Rebuilds whichever model a checkpoint holds, weights included.
template <typename Real>
std::unique_ptr<Recognizer<Real>> LoadRecognizer(const Checkpoint &ckpt) {
  auto it = ckpt.header.find("model.kind");
  if (it == ckpt.header.end()) throw LoadError("checkpoint header lacks model.kind");
  std::unique_ptr<Recognizer<Real>> model;
  if (it->second == "asr") {
    model = std::make_unique<AsrModel<Real>>(ConformerConfig::FromKv("model.", ckpt.header), 0);
  } else if (it->second == "transfer") {
    model = std::make_unique<TransferModel<Real>>(ConformerConfig::FromKv("source.", ckpt.header),
                                                  TransferConfig::FromKv("transfer.", ckpt.header), 0);
  } else {
    throw LoadError(StrCat("unknown model kind '", it->second, "'"));
  }
  try {
    ImportParams(ckpt.params, &model->Params());
  } catch (const IncompatibleArchitecture &e) {
    throw LoadError(e.what());
  }
  if ((int)ckpt.vocabulary.size() != model->VocabSize())
    throw LoadError(StrCat("checkpoint vocabulary has ", ckpt.vocabulary.size(), " symbols, model expects ",
                           model->VocabSize()));
  return model;
}

/// The source model as-is, for decoding another domain without training.
template <typename Real>
std::unique_ptr<AsrModel<Real>> DirectDecodeModel(const Checkpoint &source) {
  auto model = std::make_unique<AsrModel<Real>>(SourceConfigOf(source), 0);
  try {
    ImportParams(source.params, &model->Params());
  } catch (const IncompatibleArchitecture &e) {
    throw LoadError(e.what());
  }
  model->SetAllTrainable(false);
  return model;
}

}  // namespace enctap

#endif  // ENCTAP_TRANSFER_TRANSFER_H_
