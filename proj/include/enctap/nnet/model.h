// enctap/nnet/model.h

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

#ifndef ENCTAP_NNET_MODEL_H_
#define ENCTAP_NNET_MODEL_H_

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "enctap/data/tokenizer.h"
#include "enctap/nnet/config.h"
#include "enctap/nnet/conformer.h"
#include "enctap/objective/ctc.h"
#include "enctap/objective/losses.h"

namespace enctap {

/// Per-encoder-layer outputs, entry k-1 holding layer k (T' x d_model).
template <typename Real>
struct LayerEmbeddings {
  std::vector<Matrix<Real>> per_layer;
};

template <typename Real>
struct LossParts {
  Var<Real> total;
  Var<Real> ctc;
  Var<Real> att;
};

/// Anything with an encoder producing T' x d sequences and the shared
/// CTC + attention-decoder head. Owns its parameters.
template <typename Real>
class Recognizer {
 public:
  virtual ~Recognizer() = default;
  Recognizer(const Recognizer &) = delete;
  Recognizer &operator=(const Recognizer &) = delete;

  virtual std::string Kind() const = 0;

  /// Features (T x input_dim) to the final encoder sequence (T' x d).
  virtual Var<Real> Encode(Graph<Real> &g, const Matrix<Real> &feats, const ForwardContext &ctx) const = 0;

  /// Architecture description stored in checkpoint headers.
  virtual void ToKv(KeyValues *kv) const = 0;

  Var<Real> CtcLogProbs(Var<Real> encoded) const { return ag::LogSoftmax((*ctc_)(encoded)); }

  Var<Real> DecoderLogits(Var<Real> encoded, std::span<const int> prefix, const ForwardContext &ctx,
                          AttentionTrace<Real> *trace = nullptr) const {
    return decoder_->Forward(encoded, prefix, Tokenizer::kSos, ctx, trace);
  }

  /// Joint CTC/attention loss of one utterance with teacher forcing;
  /// `tokens` excludes sos/eos.
  LossParts<Real> Loss(Graph<Real> &g, const Matrix<Real> &feats, std::span<const int> tokens,
                       const ForwardContext &ctx) const {
    Var<Real> enc = Encode(g, feats, ctx);
    Var<Real> ctc = ag::CtcLoss(CtcLogProbs(enc), tokens);
    std::vector<int> prefix{Tokenizer::kSos}, targets(tokens.begin(), tokens.end());
    prefix.insert(prefix.end(), tokens.begin(), tokens.end());
    targets.push_back(Tokenizer::kEos);
    Var<Real> att = ag::CrossEntropy(DecoderLogits(enc, prefix, ctx), std::span<const int>(targets),
                                     static_cast<Real>(head_config_.label_smoothing));
    return {ag::JointLoss(ctc, att, static_cast<Real>(head_config_.ctc_weight)), ctc, att};
  }

  ParameterSet<Real> &Params() { return params_; }
  const ParameterSet<Real> &Params() const { return params_; }
  const ConformerConfig &HeadConfig() const { return head_config_; }
  int VocabSize() const { return head_config_.vocab_size; }

  void SetAllTrainable(bool trainable) {
    for (auto &p : params_.All()) p->trainable = trainable;
  }

 protected:
  Recognizer() = default;

  void BuildHead(const std::string &prefix, const ConformerConfig &config, Rng &rng) {
    head_config_ = config;
    decoder_ = std::make_unique<AttentionDecoder<Real>>(&params_, prefix + "decoder", config, rng);
    ctc_.emplace(&params_, prefix + "ctc.proj", config.d_model, config.vocab_size, rng);
  }

  ParameterSet<Real> params_;
  ConformerConfig head_config_;
  std::unique_ptr<AttentionDecoder<Real>> decoder_;
  std::optional<Linear<Real>> ctc_;
};

/// Plain Conformer encoder-decoder: stem, encoder blocks, CTC head and
/// attention decoder. Parameters are "encoder.*", "decoder.*", "ctc.*".
template <typename Real>
class AsrModel : public Recognizer<Real> {
 public:
  AsrModel(const ConformerConfig &config, uint64_t seed) : config_(config) {
    config.Validate();
    Rng rng(seed);
    encoder_ = std::make_unique<ConformerEncoder<Real>>(&this->params_, "encoder", config, config.num_encoder_layers,
                                                        /*with_stem=*/true, rng);
    this->BuildHead("", config, rng);
  }

  std::string Kind() const override { return "asr"; }

  Var<Real> Encode(Graph<Real> &g, const Matrix<Real> &feats, const ForwardContext &ctx) const override {
    return encoder_->Forward(g.Input(feats), ctx);
  }

  std::vector<Var<Real>> EncodeLayers(Graph<Real> &g, const Matrix<Real> &feats, const ForwardContext &ctx) const {
    return encoder_->ForwardLayers(g.Input(feats), ctx);
  }

  void ToKv(KeyValues *kv) const override {
    (*kv)["model.kind"] = Kind();
    config_.ToKv("model.", kv);
  }

  const ConformerConfig &Config() const { return config_; }

 private:
  ConformerConfig config_;
  std::unique_ptr<ConformerEncoder<Real>> encoder_;
};

/// Runs the encoder without building a backward graph and returns every
/// layer output. Dropout is drawn from `seed` in train mode; eval mode is
/// deterministic.
template <typename Real>
LayerEmbeddings<Real> EncoderForward(const AsrModel<Real> &model, const Matrix<Real> &feats, bool train_mode,
                                     uint64_t seed) {
  Graph<Real> g(/*grad_enabled=*/false);
  Rng rng(seed);
  ForwardContext ctx{train_mode, train_mode ? &rng : nullptr, model.Config().dropout};
  LayerEmbeddings<Real> out;
  for (const Var<Real> &v : model.EncodeLayers(g, feats, ctx)) out.per_layer.push_back(v.value());
  return out;
}

template <typename Real>
std::vector<ManifestEntry> ParameterManifest(const Recognizer<Real> &model) {
  return Manifest(model.Params());
}

}  // namespace enctap

#endif  // ENCTAP_NNET_MODEL_H_
