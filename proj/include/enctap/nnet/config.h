// enctap/nnet/config.h

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

#ifndef ENCTAP_NNET_CONFIG_H_
#define ENCTAP_NNET_CONFIG_H_

#include <cstdint>
#include <map>
#include <sstream>
#include <string>

#include "enctap/base/error.h"

namespace enctap {

/// Flat string map used to persist configs inside checkpoints.
using KeyValues = std::map<std::string, std::string>;

namespace internal {
template <typename T>
void PutKv(KeyValues *kv, const std::string &key, const T &v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  (*kv)[key] = os.str();
}
template <typename T>
T GetKv(const KeyValues &kv, const std::string &key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw LoadError(StrCat("missing config key '", key, "'"));
  std::istringstream is(it->second);
  T v{};
  is >> v;
  if (is.fail()) throw LoadError(StrCat("bad value '", it->second, "' for config key '", key, "'"));
  return v;
}
}  // namespace internal

/// Conformer encoder-decoder hyperparameters. Defaults are the desk-scale
/// shrink of the large reference configuration (Paper()), keeping the
/// ff/d_model = 4 and head-size ratios.
struct ConformerConfig {
  int input_dim = 80;  // feature dims entering the subsampling stem
  int d_model = 64;
  int num_encoder_layers = 6;
  int encoder_ff_units = 256;
  int num_decoder_layers = 2;
  int decoder_ff_units = 256;
  int attention_heads = 4;
  int conv_kernel = 7;
  int vocab_size = 0;  // set from the tokenizer
  double ctc_weight = 0.3;
  double dropout = 0.1;
  double label_smoothing = 0.0;

  /// 512-dim, 12-layer encoder / 6-layer decoder reference configuration.
  static ConformerConfig Paper(int vocab_size = 5000) {
    ConformerConfig c;
    c.d_model = 512;
    c.num_encoder_layers = 12;
    c.encoder_ff_units = 2048;
    c.num_decoder_layers = 6;
    c.decoder_ff_units = 2048;
    c.attention_heads = 8;
    c.conv_kernel = 31;
    c.vocab_size = vocab_size;
    c.ctc_weight = 0.3;
    return c;
  }

  void Validate() const {
    if (input_dim < 1 || d_model < 1 || encoder_ff_units < 1 || decoder_ff_units < 1)
      throw InvalidInput("model dimensions must be positive");
    if (num_encoder_layers < 0 || num_decoder_layers < 1) throw InvalidInput("bad layer counts");
    if (attention_heads < 1 || d_model % attention_heads != 0)
      throw InvalidInput(StrCat("d_model ", d_model, " is not divisible by ", attention_heads, " heads"));
    if (conv_kernel < 1 || conv_kernel % 2 == 0) throw InvalidInput(StrCat("conv_kernel ", conv_kernel, " must be odd"));
    if (vocab_size < 5) throw InvalidInput(StrCat("vocab_size ", vocab_size, " too small"));
    if (!(ctc_weight >= 0.0 && ctc_weight <= 1.0)) throw InvalidInput(StrCat("ctc_weight ", ctc_weight, " not in [0,1]"));
    if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidInput("dropout must be in [0,1)");
    if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) throw InvalidInput("label_smoothing must be in [0,1)");
  }

  void ToKv(const std::string &prefix, KeyValues *kv) const {
    using internal::PutKv;
    PutKv(kv, prefix + "input_dim", input_dim);
    PutKv(kv, prefix + "d_model", d_model);
    PutKv(kv, prefix + "num_encoder_layers", num_encoder_layers);
    PutKv(kv, prefix + "encoder_ff_units", encoder_ff_units);
    PutKv(kv, prefix + "num_decoder_layers", num_decoder_layers);
    PutKv(kv, prefix + "decoder_ff_units", decoder_ff_units);
    PutKv(kv, prefix + "attention_heads", attention_heads);
    PutKv(kv, prefix + "conv_kernel", conv_kernel);
    PutKv(kv, prefix + "vocab_size", vocab_size);
    PutKv(kv, prefix + "ctc_weight", ctc_weight);
    PutKv(kv, prefix + "dropout", dropout);
    PutKv(kv, prefix + "label_smoothing", label_smoothing);
  }

  static ConformerConfig FromKv(const std::string &prefix, const KeyValues &kv) {
    using internal::GetKv;
    ConformerConfig c;
    c.input_dim = GetKv<int>(kv, prefix + "input_dim");
    c.d_model = GetKv<int>(kv, prefix + "d_model");
    c.num_encoder_layers = GetKv<int>(kv, prefix + "num_encoder_layers");
    c.encoder_ff_units = GetKv<int>(kv, prefix + "encoder_ff_units");
    c.num_decoder_layers = GetKv<int>(kv, prefix + "num_decoder_layers");
    c.decoder_ff_units = GetKv<int>(kv, prefix + "decoder_ff_units");
    c.attention_heads = GetKv<int>(kv, prefix + "attention_heads");
    c.conv_kernel = GetKv<int>(kv, prefix + "conv_kernel");
    c.vocab_size = GetKv<int>(kv, prefix + "vocab_size");
    c.ctc_weight = GetKv<double>(kv, prefix + "ctc_weight");
    c.dropout = GetKv<double>(kv, prefix + "dropout");
    c.label_smoothing = GetKv<double>(kv, prefix + "label_smoothing");
    return c;
  }

  bool operator==(const ConformerConfig &) const = default;
};

/// Output length of the two stride-2, kernel-3, unpadded stem convolutions.
/// Returns 0 when the input is too short (fewer than 7 frames).
inline int SubsampledLength(int frames) {
  if (frames < 7) return 0;
  int t1 = (frames - 3) / 2 + 1;
  return (t1 - 3) / 2 + 1;
}

/// Closed-form parameter count of an AsrModel built from `c`.
inline int64_t ExpectedParameterCount(const ConformerConfig &c) {
  const int64_t d = c.d_model, f = c.input_dim, v = c.vocab_size, k = c.conv_kernel;
  const int64_t ln = 2 * d;
  const int64_t stem = (3 * f * d + d) + (3 * d * d + d) + (d * d + d);
  auto ff = [&](int64_t units) { return d * units + units + units * d + d; };
  const int64_t mha = 4 * (d * d + d);
  const int64_t rel_mha = mha + d * d + 2 * d;
  const int64_t conv = (d * 2 * d + 2 * d) + (k * d + d) + ln + (d * d + d);
  const int64_t enc_layer = 2 * (ln + ff(c.encoder_ff_units)) + (ln + rel_mha) + (ln + conv) + ln;
  const int64_t dec_layer = (ln + mha) + (ln + mha) + (ln + ff(c.decoder_ff_units));
  const int64_t decoder = v * d + c.num_decoder_layers * dec_layer + ln + (d * v + v);
  const int64_t ctc = d * v + v;
  return stem + c.num_encoder_layers * enc_layer + decoder + ctc;
}

}  // namespace enctap

#endif  // ENCTAP_NNET_CONFIG_H_
