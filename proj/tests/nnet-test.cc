// tests/nnet-test.cc

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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <vector>

#include "enctap/nnet/checkpoint.h"
#include "enctap/nnet/model.h"
#include "oracles.h"

namespace enctap {
namespace {

ConformerConfig DeskConfig(int vocab = 12, int input_dim = 20) {
  ConformerConfig c;
  c.input_dim = input_dim;
  c.vocab_size = vocab;
  return c;
}

using oracle::RandomFeats;
using oracle::TinyConfig;

TEST(Subsampling, LengthArithmetic) {
  EXPECT_EQ(SubsampledLength(98), 23);
  EXPECT_EQ(SubsampledLength(7), 1);
  EXPECT_EQ(SubsampledLength(6), 0);
  AsrModel<float> model(DeskConfig(), 1);
  EXPECT_NO_THROW(EncoderForward(model, RandomFeats<float>(7, 20, 1), false, 0));
  EXPECT_THROW(EncoderForward(model, RandomFeats<float>(6, 20, 1), false, 0), InvalidInput);
}

TEST(Subsampling, OutputLengthDependsOnlyOnInputLength) {
  AsrModel<float> model(DeskConfig(), 2);
  std::mt19937 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    int frames = 7 + static_cast<int>(rng() % 150);
    auto a = EncoderForward(model, RandomFeats<float>(frames, 20, rng()), false, 0);
    auto b = EncoderForward(model, MatrixF(100.0f * RandomFeats<float>(frames, 20, rng())), false, 0);
    ASSERT_EQ(a.per_layer.back().rows(), SubsampledLength(frames));
    ASSERT_EQ(b.per_layer.back().rows(), SubsampledLength(frames));
  }
}

TEST(Encoder, ShapesAndDeterminism) {
  ConformerConfig c = DeskConfig();
  AsrModel<float> model(c, 4);
  MatrixF x = RandomFeats<float>(98, 20, 5);
  auto a = EncoderForward(model, x, false, 0), b = EncoderForward(model, x, false, 99);
  ASSERT_EQ(static_cast<int>(a.per_layer.size()), c.num_encoder_layers);
  for (size_t l = 0; l < a.per_layer.size(); ++l) {
    EXPECT_EQ(a.per_layer[l].rows(), 23);
    EXPECT_EQ(a.per_layer[l].cols(), c.d_model);
    EXPECT_TRUE((a.per_layer[l].array() == b.per_layer[l].array()).all()) << "layer " << l + 1;
  }
  AsrModel<float> twin(c, 4);
  EXPECT_EQ(Checksum(model.Params()), Checksum(twin.Params()));
  auto train1 = EncoderForward(model, x, true, 7), train2 = EncoderForward(model, x, true, 8);
  EXPECT_FALSE((train1.per_layer.back().array() == train2.per_layer.back().array()).all());
}

TEST(Encoder, LayerOutputsAreNormalized) {
  AsrModel<double> model(DeskConfig(), 6);
  auto emb = EncoderForward(model, RandomFeats<double>(120, 20, 7), false, 0);
  for (size_t l = 0; l < emb.per_layer.size(); ++l) {
    const MatrixD &h = emb.per_layer[l];
    for (int t = 0; t < h.rows(); ++t) {
      double mean = h.row(t).mean();
      double var = (h.row(t).array() - mean).square().mean();
      ASSERT_NEAR(mean, 0.0, 0.2) << "layer " << l + 1;
      ASSERT_NEAR(var, 1.0, 0.2) << "layer " << l + 1;
    }
  }
}

TEST(Encoder, NonFiniteOutputNamesTheLayer) {
  AsrModel<float> model(DeskConfig(), 8);
  Parameter<float> *p = nullptr;
  for (const auto &q : model.Params().All())
    if (q->name.rfind("encoder.layer03.", 0) == 0) {
      p = q.get();
      break;
    }
  ASSERT_NE(p, nullptr);
  p->value.setConstant(std::numeric_limits<float>::quiet_NaN());
  try {
    EncoderForward(model, RandomFeats<float>(40, 20, 9), false, 0);
    FAIL() << "expected NumericalFailure";
  } catch (const NumericalFailure &e) {
    EXPECT_NE(std::string(e.what()).find("encoder.layer03"), std::string::npos) << e.what();
  }
}

MatrixD Logits(const AsrModel<double> &model, const MatrixD &feats, const std::vector<int> &prefix,
               AttentionTrace<double> *trace = nullptr) {
  Graph<double> g(false);
  ForwardContext ctx;
  Var<double> enc = model.Encode(g, feats, ctx);
  return model.DecoderLogits(enc, prefix, ctx, trace).value();
}

TEST(Decoder, CausalSelfAttention) {
  AsrModel<double> model(DeskConfig(), 10);
  MatrixD feats = RandomFeats<double>(50, 20, 11);
  std::vector<int> prefix{Tokenizer::kSos, 5, 6, 7, 8, 9};
  MatrixD base = Logits(model, feats, prefix);
  for (size_t j = 1; j < prefix.size(); ++j) {
    std::vector<int> changed = prefix;
    changed[j] = 11;
    MatrixD other = Logits(model, feats, changed);
    for (size_t i = 0; i < prefix.size(); ++i) {
      bool same = (base.row(i).array() == other.row(i).array()).all();
      if (i < j) {
        EXPECT_TRUE(same) << "row " << i << " changed with token " << j;
      } else if (i == j) {
        EXPECT_FALSE(same);
      }
    }
  }
}

TEST(Decoder, NormalizedOutputsAndAttention) {
  AsrModel<double> model(DeskConfig(), 12);
  MatrixD feats = RandomFeats<double>(60, 20, 13);
  AttentionTrace<double> trace;
  MatrixD logits = Logits(model, feats, {Tokenizer::kSos, 4, 5, 6}, &trace);
  EXPECT_TRUE(logits.allFinite());
  for (int i = 0; i < logits.rows(); ++i) {
    double mx = logits.row(i).maxCoeff();
    RowVector<double> p = (logits.row(i).array() - mx).exp();
    p /= p.sum();
    EXPECT_NEAR(p.sum(), 1.0, 1e-6);
  }
  ASSERT_EQ(trace.cross_attention.size(), 2u * 4u);  // layers x heads
  for (const MatrixD &a : trace.cross_attention) {
    EXPECT_EQ(a.cols(), SubsampledLength(60));
    for (int i = 0; i < a.rows(); ++i) EXPECT_NEAR(a.row(i).sum(), 1.0, 1e-6);
  }
  for (const MatrixD &a : trace.self_attention)
    for (int i = 0; i < a.rows(); ++i)
      for (int j = i + 1; j < a.cols(); ++j) EXPECT_EQ(a(i, j), 0.0);
}

TEST(Decoder, RejectsBadPrefixes) {
  AsrModel<double> model(DeskConfig(), 14);
  MatrixD feats = RandomFeats<double>(30, 20, 15);
  EXPECT_THROW(Logits(model, feats, {Tokenizer::kSos, 12}), InvalidInput);
  EXPECT_THROW(Logits(model, feats, {Tokenizer::kSos, -1}), InvalidInput);
  EXPECT_THROW(Logits(model, feats, {4, 5}), InvalidInput);
  EXPECT_THROW(Logits(model, feats, {}), InvalidInput);
}

TEST(Manifest, EveryEncoderLayerHasTheSameShape) {
  AsrModel<float> model(DeskConfig(), 16);
  std::map<int, std::multiset<std::string>> per_layer;
  for (const ManifestEntry &e : ParameterManifest(model)) {
    if (e.name.rfind("encoder.layer", 0) != 0) continue;
    int layer = std::stoi(e.name.substr(13, 2));
    per_layer[layer].insert(StrCat(e.name.substr(16), ":", e.rows, "x", e.cols));
  }
  ASSERT_EQ(per_layer.size(), 6u);
  for (const auto &[layer, names] : per_layer) EXPECT_EQ(names, per_layer.begin()->second) << layer;
  auto m1 = ParameterManifest(model);
  AsrModel<float> other(DeskConfig(), 17);
  auto m2 = ParameterManifest(other);
  ASSERT_EQ(m1.size(), m2.size());
  for (size_t i = 0; i < m1.size(); ++i) EXPECT_EQ(m1[i].name, m2[i].name);
}

TEST(Manifest, ParameterCountIsClosedForm) {
  std::vector<ConformerConfig> configs{DeskConfig(), TinyConfig(), DeskConfig(30, 83)};
  ConformerConfig wide = DeskConfig();
  wide.d_model = 48;
  wide.attention_heads = 6;
  wide.encoder_ff_units = 100;
  wide.num_encoder_layers = 3;
  wide.num_decoder_layers = 3;
  wide.conv_kernel = 15;
  configs.push_back(wide);
  configs.push_back(ConformerConfig::Paper(200));
  for (const ConformerConfig &c : configs) {
    AsrModel<float> model(c, 18);
    int64_t enumerated = 0;
    for (const ManifestEntry &e : ParameterManifest(model)) enumerated += int64_t(e.rows) * e.cols;
    EXPECT_EQ(enumerated, ExpectedParameterCount(c)) << c.d_model;
  }
}

TEST(Config, Validation) {
  ConformerConfig c = DeskConfig();
  c.attention_heads = 5;
  EXPECT_THROW(c.Validate(), InvalidInput);
  c = DeskConfig();
  c.conv_kernel = 8;
  EXPECT_THROW(c.Validate(), InvalidInput);
  c = DeskConfig();
  c.ctc_weight = 1.2;
  EXPECT_THROW(AsrModel<float>(c, 1), InvalidInput);
  ConformerConfig p = ConformerConfig::Paper();
  EXPECT_EQ(p.d_model, 512);
  EXPECT_EQ(p.num_encoder_layers, 12);
  EXPECT_EQ(p.num_decoder_layers, 6);
  EXPECT_EQ(p.encoder_ff_units, 2048);
  EXPECT_EQ(p.attention_heads, 8);
  EXPECT_EQ(p.conv_kernel, 31);
  EXPECT_DOUBLE_EQ(p.ctc_weight, 0.3);
  KeyValues kv;
  p.ToKv("m.", &kv);
  EXPECT_EQ(ConformerConfig::FromKv("m.", kv), p);
}

TEST(Gradient, TinyModelMatchesFiniteDifferences) {
  AsrModel<double> model(TinyConfig(), 19);
  std::vector<oracle::GradientMismatch> per_tensor;
  oracle::CheckGradients(&model, RandomFeats<double>(12, 4, 20), {4}, &per_tensor);
  for (const auto &m : per_tensor) EXPECT_LT(m.rel_error, 1e-4) << m.name;
}

Checkpoint MakeTestCheckpoint() {
  AsrModel<float> model(DeskConfig(), 21);
  Checkpoint ckpt;
  model.ToKv(&ckpt.header);
  ckpt.vocabulary = {"<blank>", "<unk>", "<sos>", "<eos>", " ", "a"};
  ckpt.step = 1234;
  ckpt.params = ExportParams(model.Params());
  ckpt.optimizer_state.emplace_back("adam.m:x", MatrixF::Constant(2, 3, 0.5f));
  return ckpt;
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Checkpoint ckpt = MakeTestCheckpoint();
  std::stringstream ss;
  WriteCheckpoint(ckpt, ss);
  Checkpoint back = ReadCheckpoint(ss);
  EXPECT_EQ(back.header, ckpt.header);
  EXPECT_EQ(back.vocabulary, ckpt.vocabulary);
  EXPECT_EQ(back.step, 1234u);
  ASSERT_EQ(back.params.size(), ckpt.params.size());
  for (size_t i = 0; i < ckpt.params.size(); ++i) {
    EXPECT_EQ(back.params[i].first, ckpt.params[i].first);
    EXPECT_EQ(Checksum(back.params[i].second), Checksum(ckpt.params[i].second));
  }
  AsrModel<float> model(ConformerConfig::FromKv("model.", back.header), 999);
  ImportParams(back.params, &model.Params());
  AsrModel<float> original(DeskConfig(), 21);
  EXPECT_EQ(Checksum(model.Params()), Checksum(original.Params()));
  EXPECT_EQ(Checksum(back.optimizer_state[0].second), Checksum(ckpt.optimizer_state[0].second));
}

TEST(Checkpoint, RejectsOtherVersionsAndCorruption) {
  std::stringstream ss;
  WriteCheckpoint(MakeTestCheckpoint(), ss);
  std::string bytes = ss.str();
  std::string bumped = bytes;
  bumped[8] = static_cast<char>(kCheckpointVersion + 1);
  std::istringstream v(bumped);
  EXPECT_THROW(ReadCheckpoint(v), LoadError);
  std::istringstream truncated(bytes.substr(0, bytes.size() / 2));
  EXPECT_THROW(ReadCheckpoint(truncated), LoadError);
  std::istringstream garbage("definitely not a checkpoint");
  EXPECT_THROW(ReadCheckpoint(garbage), LoadError);
  EXPECT_THROW(LoadCheckpoint("/nonexistent/x.ckpt"), LoadError);
}

TEST(Checkpoint, ImportListsIncompatibleNames) {
  Checkpoint ckpt = MakeTestCheckpoint();
  AsrModel<float> bigger_vocab(DeskConfig(13), 1);
  try {
    ImportParams(ckpt.params, &bigger_vocab.Params());
    FAIL();
  } catch (const IncompatibleArchitecture &e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("ctc.proj"), std::string::npos);
    EXPECT_NE(msg.find("decoder.out"), std::string::npos);
    EXPECT_EQ(msg.find("encoder.layer01"), std::string::npos);
  }
}

}  // namespace
}  // namespace enctap
