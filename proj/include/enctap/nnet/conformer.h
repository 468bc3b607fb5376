// enctap/nnet/conformer.h

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

#ifndef ENCTAP_NNET_CONFORMER_H_
#define ENCTAP_NNET_CONFORMER_H_

#include <cstdio>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "enctap/base/error.h"
#include "enctap/nnet/config.h"
#include "enctap/nnet/layers.h"

namespace enctap {

/// "encoder.layer03"-style names; layers are numbered from 1.
inline std::string LayerName(const std::string &prefix, int one_based_index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "layer%02d", one_based_index);
  return prefix + "." + buf;
}

/// Optional subsampling stem followed by a stack of Conformer blocks.
/// Every block output is exposed so that any prefix depth can be tapped.
template <typename Real>
class ConformerEncoder {
 public:
  /// `with_stem` false builds a stack that consumes d_model-wide
  /// sequences directly (used downstream of a tapped prefix).
  ConformerEncoder(ParameterSet<Real> *params, const std::string &prefix, const ConformerConfig &config,
                   int num_layers, bool with_stem, Rng &rng)
      : prefix_(prefix), d_model_(config.d_model) {
    if (with_stem) stem_.emplace(params, prefix + ".stem", config.input_dim, config.d_model, rng);
    for (int l = 1; l <= num_layers; ++l)
      layers_.push_back(std::make_unique<ConformerBlock<Real>>(params, LayerName(prefix, l), config.d_model,
                                                               config.encoder_ff_units, config.attention_heads,
                                                               config.conv_kernel, rng));
  }

  /// Runs the stem (if any) and the first `depth` blocks (all when
  /// depth < 0); returns the output of every block that ran.
  std::vector<Var<Real>> ForwardLayers(Var<Real> x, const ForwardContext &ctx, int depth = -1) const {
    if (depth < 0) depth = NumLayers();
    if (depth > NumLayers()) throw InvalidInput(StrCat("depth ", depth, " exceeds ", NumLayers(), " layers"));
    Var<Real> h = stem_ ? MaybeDropout((*stem_)(x), ctx) : x;
    if (h.cols() != d_model_) throw InvalidInput(StrCat("encoder expects ", d_model_, "-dim input, got ", h.cols()));
    std::vector<Var<Real>> outs;
    for (int l = 0; l < depth; ++l) {
      h = (*layers_[l])(h, ctx);
      if (!h.value().allFinite())
        throw NumericalFailure(StrCat(LayerName(prefix_, l + 1), " produced non-finite values"));
      outs.push_back(h);
    }
    return outs;
  }

  Var<Real> Forward(Var<Real> x, const ForwardContext &ctx) const {
    if (NumLayers() == 0) return stem_ ? MaybeDropout((*stem_)(x), ctx) : x;
    return ForwardLayers(x, ctx).back();
  }

  int NumLayers() const { return static_cast<int>(layers_.size()); }
  bool HasStem() const { return stem_.has_value(); }

 private:
  std::string prefix_;
  int d_model_;
  std::optional<SubsamplingStem<Real>> stem_;
  std::vector<std::unique_ptr<ConformerBlock<Real>>> layers_;
};

template <typename Real>
class DecoderLayer {
 public:
  DecoderLayer(ParameterSet<Real> *params, const std::string &name, int d, int ff_units, int heads, Rng &rng)
      : ln_self_(params, name + ".ln_self", d),
        self_att_(params, name + ".self_att", d, heads, rng),
        ln_src_(params, name + ".ln_src", d),
        src_att_(params, name + ".src_att", d, heads, rng),
        ln_ff_(params, name + ".ln_ff", d),
        ff_(params, name + ".ff", d, ff_units, FeedForward<Real>::kRelu, rng) {}

  Var<Real> operator()(Var<Real> x, Var<Real> memory, const ForwardContext &ctx, AttentionTrace<Real> *trace) const {
    Var<Real> normed = ln_self_(x);
    x = ag::AddScaled(x, MaybeDropout(self_att_(normed, normed, true, ctx,
                                                trace ? &trace->self_attention : nullptr), ctx), Real(1));
    x = ag::AddScaled(x, MaybeDropout(src_att_(ln_src_(x), memory, false, ctx,
                                               trace ? &trace->cross_attention : nullptr), ctx), Real(1));
    return ag::AddScaled(x, MaybeDropout(ff_(ln_ff_(x), ctx), ctx), Real(1));
  }

 private:
  LayerNormLayer<Real> ln_self_;
  MultiHeadAttention<Real> self_att_;
  LayerNormLayer<Real> ln_src_;
  MultiHeadAttention<Real> src_att_;
  LayerNormLayer<Real> ln_ff_;
  FeedForward<Real> ff_;
};

/// Autoregressive attention decoder: token embedding + absolute positions,
/// causal self-attention, cross-attention to the encoder output.
template <typename Real>
class AttentionDecoder {
 public:
  AttentionDecoder(ParameterSet<Real> *params, const std::string &prefix, const ConformerConfig &config, Rng &rng)
      : vocab_(config.vocab_size), d_(config.d_model) {
    embed_ = params->Add(prefix + ".embed", config.vocab_size, config.d_model);
    std::normal_distribution<double> n(0.0, 1.0);
    for (Eigen::Index i = 0; i < embed_->value.size(); ++i) embed_->value.data()[i] = static_cast<Real>(n(rng));
    for (int l = 1; l <= config.num_decoder_layers; ++l)
      layers_.push_back(std::make_unique<DecoderLayer<Real>>(params, LayerName(prefix, l), config.d_model,
                                                             config.decoder_ff_units, config.attention_heads, rng));
    ln_out_.emplace(params, prefix + ".ln_out", config.d_model);
    out_.emplace(params, prefix + ".out", config.d_model, config.vocab_size, rng);
  }

  /// Logits (len(prefix) x vocab); row i predicts the token after prefix[i].
  Var<Real> Forward(Var<Real> memory, std::span<const int> prefix, int sos, const ForwardContext &ctx,
                    AttentionTrace<Real> *trace = nullptr) const {
    if (prefix.empty()) throw InvalidInput("decoder prefix is empty");
    if (prefix[0] != sos) throw InvalidInput("decoder prefix must start with the start symbol");
    for (int id : prefix)
      if (id < 0 || id >= vocab_) throw InvalidInput(StrCat("decoder prefix id ", id, " outside vocabulary of ", vocab_));
    Graph<Real> &g = *memory.graph;
    Var<Real> x = ag::GatherRows(g.Param(*embed_), prefix);
    x = MaybeDropout(ag::Add(x, g.Constant(AbsolutePositionTable<Real>(static_cast<int>(prefix.size()), d_))), ctx);
    for (const auto &layer : layers_) x = (*layer)(x, memory, ctx, trace);
    return (*out_)((*ln_out_)(x));
  }

 private:
  int vocab_;
  int d_;
  Parameter<Real> *embed_ = nullptr;
  std::vector<std::unique_ptr<DecoderLayer<Real>>> layers_;
  std::optional<LayerNormLayer<Real>> ln_out_;
  std::optional<Linear<Real>> out_;
};

}  // namespace enctap

#endif  // ENCTAP_NNET_CONFORMER_H_
