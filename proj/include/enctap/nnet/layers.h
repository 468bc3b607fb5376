// enctap/nnet/layers.h

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

#ifndef ENCTAP_NNET_LAYERS_H_
#define ENCTAP_NNET_LAYERS_H_

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "enctap/autograd/graph.h"
#include "enctap/autograd/ops.h"
#include "enctap/base/random.h"
#include "enctap/nnet/config.h"

namespace enctap {

/// Per-forward settings. Dropout is active only when `train` is set and an
/// rng is supplied.
struct ForwardContext {
  bool train = false;
  Rng *rng = nullptr;
  double dropout = 0.0;

  bool Stochastic() const { return train && rng != nullptr; }
};

template <typename Real>
Var<Real> MaybeDropout(Var<Real> x, const ForwardContext &ctx) {
  if (!ctx.Stochastic() || ctx.dropout <= 0.0) return x;
  return ag::Dropout(x, static_cast<Real>(ctx.dropout), *ctx.rng);
}

/// y = x W + b with W stored in x out.
template <typename Real>
class Linear {
 public:
  Linear() = default;
  Linear(ParameterSet<Real> *params, const std::string &name, int in, int out, Rng &rng, bool bias = true) {
    weight_ = params->Add(name + ".weight", in, out);
    Real bound = Real(1) / std::sqrt(Real(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index i = 0; i < weight_->value.size(); ++i) weight_->value.data()[i] = static_cast<Real>(u(rng));
    if (bias) {
      bias_ = params->Add(name + ".bias", 1, out);
      for (Eigen::Index i = 0; i < bias_->value.size(); ++i) bias_->value.data()[i] = static_cast<Real>(u(rng));
    }
  }

  Var<Real> operator()(Var<Real> x) const {
    Var<Real> y = ag::MatMul(x, x.graph->Param(*weight_));
    return bias_ ? ag::AddRow(y, x.graph->Param(*bias_)) : y;
  }

  Parameter<Real> *weight() const { return weight_; }
  Parameter<Real> *bias() const { return bias_; }

 private:
  Parameter<Real> *weight_ = nullptr;
  Parameter<Real> *bias_ = nullptr;
};

template <typename Real>
class LayerNormLayer {
 public:
  LayerNormLayer() = default;
  LayerNormLayer(ParameterSet<Real> *params, const std::string &name, int dim) {
    gain_ = params->Add(name + ".gain", 1, dim);
    gain_->value.setOnes();
    bias_ = params->Add(name + ".bias", 1, dim);
  }
  Var<Real> operator()(Var<Real> x) const {
    return ag::LayerNorm(x, x.graph->Param(*gain_), x.graph->Param(*bias_));
  }

 private:
  Parameter<Real> *gain_ = nullptr;
  Parameter<Real> *bias_ = nullptr;
};

/// Position-wise feed-forward: Linear -> activation -> dropout -> Linear.
template <typename Real>
class FeedForward {
 public:
  enum Activation { kSwish, kRelu };
  FeedForward() = default;
  FeedForward(ParameterSet<Real> *params, const std::string &name, int d, int units, Activation act, Rng &rng)
      : w1_(params, name + ".w1", d, units, rng), w2_(params, name + ".w2", units, d, rng), act_(act) {}

  Var<Real> operator()(Var<Real> x, const ForwardContext &ctx) const {
    Var<Real> h = w1_(x);
    h = act_ == kSwish ? ag::Swish(h) : ag::Relu(h);
    return w2_(MaybeDropout(h, ctx));
  }

 private:
  Linear<Real> w1_, w2_;
  Activation act_ = kSwish;
};

/// Sinusoidal table for relative distances T-1, T-2, ..., -(T-1); row p
/// encodes distance T-1-p.
template <typename Real>
Matrix<Real> RelativePositionTable(int t_len, int d) {
  Matrix<Real> pe(2 * t_len - 1, d);
  for (int p = 0; p < 2 * t_len - 1; ++p) {
    double dist = t_len - 1 - p;
    for (int i = 0; i < d; i += 2) {
      double freq = std::exp(-std::log(10000.0) * i / d);
      pe(p, i) = static_cast<Real>(std::sin(dist * freq));
      if (i + 1 < d) pe(p, i + 1) = static_cast<Real>(std::cos(dist * freq));
    }
  }
  return pe;
}

/// Absolute sinusoidal positions 0..len-1.
template <typename Real>
Matrix<Real> AbsolutePositionTable(int len, int d) {
  Matrix<Real> pe(len, d);
  for (int p = 0; p < len; ++p) {
    for (int i = 0; i < d; i += 2) {
      double freq = std::exp(-std::log(10000.0) * i / d);
      pe(p, i) = static_cast<Real>(std::sin(p * freq));
      if (i + 1 < d) pe(p, i + 1) = static_cast<Real>(std::cos(p * freq));
    }
  }
  return pe;
}

/// Self-attention with relative positional encoding: the score of query i
/// on key j is (q_i + u) . k_j + (q_i + v) . W_pos r_{i-j}, per head,
/// scaled by 1/sqrt(d_head).
template <typename Real>
class RelPositionSelfAttention {
 public:
  RelPositionSelfAttention() = default;
  RelPositionSelfAttention(ParameterSet<Real> *params, const std::string &name, int d, int heads, Rng &rng)
      : q_(params, name + ".q", d, d, rng),
        k_(params, name + ".k", d, d, rng),
        v_(params, name + ".v", d, d, rng),
        out_(params, name + ".out", d, d, rng),
        pos_(params, name + ".pos", d, d, rng, /*bias=*/false),
        heads_(heads),
        d_(d) {
    pos_bias_u_ = params->Add(name + ".pos_bias_u", 1, d);
    pos_bias_v_ = params->Add(name + ".pos_bias_v", 1, d);
  }

  Var<Real> operator()(Var<Real> x, const ForwardContext &ctx) const {
    Graph<Real> &g = *x.graph;
    const int t_len = static_cast<int>(x.rows());
    const int dk = d_ / heads_;
    Var<Real> q = q_(x), k = k_(x), v = v_(x);
    Var<Real> p = pos_(g.Constant(RelativePositionTable<Real>(t_len, d_)));
    Var<Real> u = g.Param(*pos_bias_u_), w = g.Param(*pos_bias_v_);
    const Real scale = Real(1) / std::sqrt(Real(dk));
    std::vector<Var<Real>> ctx_heads;
    for (int h = 0; h < heads_; ++h) {
      Var<Real> qh = ag::SliceCols(q, h * dk, dk);
      Var<Real> kh = ag::SliceCols(k, h * dk, dk);
      Var<Real> vh = ag::SliceCols(v, h * dk, dk);
      Var<Real> ph = ag::SliceCols(p, h * dk, dk);
      Var<Real> content = ag::MatMulBT(ag::AddRow(qh, ag::SliceCols(u, h * dk, dk)), kh);
      Var<Real> position = ag::RelShift(ag::MatMulBT(ag::AddRow(qh, ag::SliceCols(w, h * dk, dk)), ph));
      Var<Real> attn = ag::Softmax(ag::Scale(ag::Add(content, position), scale));
      ctx_heads.push_back(ag::MatMul(MaybeDropout(attn, ctx), vh));
    }
    return out_(heads_ == 1 ? ctx_heads[0] : ag::ConcatCols(ctx_heads));
  }

 private:
  Linear<Real> q_, k_, v_, out_, pos_;
  Parameter<Real> *pos_bias_u_ = nullptr;
  Parameter<Real> *pos_bias_v_ = nullptr;
  int heads_ = 1;
  int d_ = 0;
};

/// Records attention weight matrices (one per head) for inspection.
template <typename Real>
struct AttentionTrace {
  std::vector<Matrix<Real>> self_attention;
  std::vector<Matrix<Real>> cross_attention;
};

/// Standard scaled dot-product multi-head attention of `query` over
/// `memory`, optionally causal.
template <typename Real>
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(ParameterSet<Real> *params, const std::string &name, int d, int heads, Rng &rng)
      : q_(params, name + ".q", d, d, rng),
        k_(params, name + ".k", d, d, rng),
        v_(params, name + ".v", d, d, rng),
        out_(params, name + ".out", d, d, rng),
        heads_(heads),
        d_(d) {}

  Var<Real> operator()(Var<Real> query, Var<Real> memory, bool causal, const ForwardContext &ctx,
                       std::vector<Matrix<Real>> *trace = nullptr) const {
    const int dk = d_ / heads_;
    Var<Real> q = q_(query), k = k_(memory), v = v_(memory);
    const Real scale = Real(1) / std::sqrt(Real(dk));
    std::vector<Var<Real>> ctx_heads;
    for (int h = 0; h < heads_; ++h) {
      Var<Real> scores = ag::Scale(ag::MatMulBT(ag::SliceCols(q, h * dk, dk), ag::SliceCols(k, h * dk, dk)), scale);
      Var<Real> attn = ag::Softmax(scores, causal);
      if (trace) trace->push_back(attn.value());
      ctx_heads.push_back(ag::MatMul(MaybeDropout(attn, ctx), ag::SliceCols(v, h * dk, dk)));
    }
    return out_(heads_ == 1 ? ctx_heads[0] : ag::ConcatCols(ctx_heads));
  }

 private:
  Linear<Real> q_, k_, v_, out_;
  int heads_ = 1;
  int d_ = 0;
};

/// Conformer convolution module: pointwise (GLU) -> depthwise -> norm ->
/// swish -> pointwise. Layer norm stands in for batch norm so utterances
/// are processed independently.
template <typename Real>
class ConvModule {
 public:
  ConvModule() = default;
  ConvModule(ParameterSet<Real> *params, const std::string &name, int d, int kernel, Rng &rng)
      : pw1_(params, name + ".pw1", d, 2 * d, rng), norm_(params, name + ".norm", d), pw2_(params, name + ".pw2", d, d, rng), d_(d) {
    dw_weight_ = params->Add(name + ".depthwise.weight", kernel, d);
    dw_bias_ = params->Add(name + ".depthwise.bias", 1, d);
    Real bound = Real(1) / std::sqrt(Real(kernel));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index i = 0; i < dw_weight_->value.size(); ++i) dw_weight_->value.data()[i] = static_cast<Real>(u(rng));
    for (Eigen::Index i = 0; i < dw_bias_->value.size(); ++i) dw_bias_->value.data()[i] = static_cast<Real>(u(rng));
  }

  Var<Real> operator()(Var<Real> x) const {
    Graph<Real> &g = *x.graph;
    Var<Real> h = pw1_(x);
    h = ag::Mul(ag::SliceCols(h, 0, d_), ag::Sigmoid(ag::SliceCols(h, d_, d_)));
    h = ag::DepthwiseConv(h, g.Param(*dw_weight_), g.Param(*dw_bias_));
    h = ag::Swish(norm_(h));
    return pw2_(h);
  }

 private:
  Linear<Real> pw1_;
  Parameter<Real> *dw_weight_ = nullptr;
  Parameter<Real> *dw_bias_ = nullptr;
  LayerNormLayer<Real> norm_;
  Linear<Real> pw2_;
  int d_ = 0;
};

/// Macaron Conformer block with pre-norm residuals and a final layer norm.
template <typename Real>
class ConformerBlock {
 public:
  ConformerBlock(ParameterSet<Real> *params, const std::string &name, int d, int ff_units, int heads, int kernel,
                 Rng &rng)
      : ln_ff1_(params, name + ".ln_ff1", d),
        ff1_(params, name + ".ff1", d, ff_units, FeedForward<Real>::kSwish, rng),
        ln_att_(params, name + ".ln_att", d),
        att_(params, name + ".att", d, heads, rng),
        ln_conv_(params, name + ".ln_conv", d),
        conv_(params, name + ".conv", d, kernel, rng),
        ln_ff2_(params, name + ".ln_ff2", d),
        ff2_(params, name + ".ff2", d, ff_units, FeedForward<Real>::kSwish, rng),
        ln_out_(params, name + ".ln_out", d) {}

  Var<Real> operator()(Var<Real> x, const ForwardContext &ctx) const {
    x = ag::AddScaled(x, MaybeDropout(ff1_(ln_ff1_(x), ctx), ctx), Real(0.5));
    x = ag::AddScaled(x, MaybeDropout(att_(ln_att_(x), ctx), ctx), Real(1));
    x = ag::AddScaled(x, MaybeDropout(conv_(ln_conv_(x)), ctx), Real(1));
    x = ag::AddScaled(x, MaybeDropout(ff2_(ln_ff2_(x), ctx), ctx), Real(0.5));
    return ln_out_(x);
  }

 private:
  LayerNormLayer<Real> ln_ff1_;
  FeedForward<Real> ff1_;
  LayerNormLayer<Real> ln_att_;
  RelPositionSelfAttention<Real> att_;
  LayerNormLayer<Real> ln_conv_;
  ConvModule<Real> conv_;
  LayerNormLayer<Real> ln_ff2_;
  FeedForward<Real> ff2_;
  LayerNormLayer<Real> ln_out_;
};

/// Two stride-2, kernel-3, unpadded convolutions over time (features as
/// channels) with ReLU, then a projection to d_model. T -> T' ~= T/4.
template <typename Real>
class SubsamplingStem {
 public:
  SubsamplingStem() = default;
  SubsamplingStem(ParameterSet<Real> *params, const std::string &name, int input_dim, int d, Rng &rng)
      : conv1_(params, name + ".conv1", 3 * input_dim, d, rng),
        conv2_(params, name + ".conv2", 3 * d, d, rng),
        out_(params, name + ".out", d, d, rng),
        input_dim_(input_dim) {}

  Var<Real> operator()(Var<Real> x) const {
    if (x.cols() != input_dim_)
      throw InvalidInput(StrCat("stem expects ", input_dim_, "-dim features, got ", x.cols()));
    if (SubsampledLength(static_cast<int>(x.rows())) < 1)
      throw InvalidInput(StrCat("input has ", x.rows(), " frames; at least 7 are needed for subsampling"));
    Var<Real> h = ag::Relu(conv1_(ag::Im2Col(x, 3, 2)));
    h = ag::Relu(conv2_(ag::Im2Col(h, 3, 2)));
    return out_(h);
  }

 private:
  Linear<Real> conv1_, conv2_, out_;
  int input_dim_ = 0;
};

}  // namespace enctap

#endif  // ENCTAP_NNET_LAYERS_H_
