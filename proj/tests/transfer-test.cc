// tests/transfer-test.cc

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

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "enctap/experiments/optimizer.h"
#include "enctap/experiments/trainer.h"
#include "enctap/transfer/transfer.h"
#include "oracles.h"

namespace enctap {
namespace {

ConformerConfig SourceConfig() {
  ConformerConfig c;
  c.input_dim = 20;
  c.d_model = 32;
  c.num_encoder_layers = 4;
  c.encoder_ff_units = 64;
  c.decoder_ff_units = 64;
  c.vocab_size = 10;
  return c;
}

TransferConfig TapConfig(int k, bool freeze) {
  TransferConfig t;
  t.tap_layer_K = k;
  t.freeze_prefix = freeze;
  t.target_config = SourceConfig();
  t.target_config.num_encoder_layers = 2;
  t.target_config.vocab_size = 8;
  return t;
}

template <typename Real>
Matrix<Real> RandomFeats(int frames, int dims, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix<Real> m(frames, dims);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Real>(n(rng));
  return m;
}

Checkpoint SourceCheckpoint(const AsrModel<float> &model) {
  Checkpoint ckpt;
  model.ToKv(&ckpt.header);
  ckpt.params = ExportParams(model.Params());
  return ckpt;
}

MatrixF Encoded(const Recognizer<float> &model, const MatrixF &feats, const ForwardContext &ctx = {}) {
  Graph<float> g(false);
  return model.Encode(g, feats, ctx).value();
}

// A few Adam steps of the joint loss on one utterance.
void TrainSteps(Recognizer<float> *model, int steps, FreezeGuard *guard = nullptr) {
  OptimizerConfig oc;
  oc.warmup_steps = 1;
  Adam adam(oc);
  MatrixF feats = RandomFeats<float>(60, 20, 77);
  std::vector<int> tokens{4, 5, 6};
  for (int step = 1; step <= steps; ++step) {
    model->Params().ZeroGrad();
    Rng rng(step);
    ForwardContext ctx{true, &rng, 0.1};
    Graph<float> g;
    g.Backward(model->Loss(g, feats, tokens, ctx).total);
    if (guard) guard->Check(step);
    adam.Step(model->Params(), step);
    if (guard) guard->Check(step);
  }
}

TEST(TapPrefix, OutputEqualsSourceLayerK) {
  AsrModel<float> source(SourceConfig(), 1);
  Checkpoint ckpt = SourceCheckpoint(source);
  MatrixF feats = RandomFeats<float>(80, 20, 2);
  LayerEmbeddings<float> emb = EncoderForward(source, feats, false, 0);
  for (int k = 1; k <= 4; ++k) {
    auto extractor = TapPrefix<float>(ckpt, k);
    EXPECT_EQ(extractor->Depth(), k);
    MatrixF out = (*extractor)(feats);
    ASSERT_EQ(out.rows(), emb.per_layer[k - 1].rows());
    EXPECT_TRUE((out.array() == emb.per_layer[k - 1].array()).all()) << "K=" << k;
    for (const auto &p : extractor->Params().All()) {
      EXPECT_EQ(p->name.find("decoder"), std::string::npos);
      for (int l = k + 1; l <= 4; ++l) EXPECT_EQ(p->name.find(LayerName("extractor", l)), std::string::npos);
    }
  }
}

TEST(TapPrefix, ShallowerPrefixesShareParameters) {
  AsrModel<float> source(SourceConfig(), 3);
  Checkpoint ckpt = SourceCheckpoint(source);
  for (int k1 = 1; k1 <= 4; ++k1)
    for (int k2 = k1 + 1; k2 <= 4; ++k2) {
      auto a = TapPrefix<float>(ckpt, k1), b = TapPrefix<float>(ckpt, k2);
      EXPECT_EQ(Checksum(a->Params(), "extractor.stem"), Checksum(b->Params(), "extractor.stem"));
      for (int l = 1; l <= k1; ++l)
        EXPECT_EQ(Checksum(a->Params(), LayerName("extractor", l) + "."),
                  Checksum(b->Params(), LayerName("extractor", l) + "."));
    }
}

TEST(TapPrefix, RejectsOutOfRangeDepth) {
  AsrModel<float> source(SourceConfig(), 4);
  Checkpoint ckpt = SourceCheckpoint(source);
  EXPECT_THROW(TapPrefix<float>(ckpt, 0), InvalidInput);
  EXPECT_THROW(TapPrefix<float>(ckpt, 5), InvalidInput);
  EXPECT_THROW(TapPrefix<float>(ckpt, -1), InvalidInput);
  EXPECT_THROW(TransferModel<float>(SourceConfig(), TapConfig(5, true), 1), InvalidInput);
}

TEST(TapPrefix, ReferenceScaleWidths) {
  ConformerConfig paper = ConformerConfig::Paper(200);
  MatrixF feats = RandomFeats<float>(40, 80, 5);
  for (int k : {4, 6, 8, 10, 12}) {
    FeatureExtractor<float> extractor(paper, k, 6);
    MatrixF out = extractor(feats);
    EXPECT_EQ(out.cols(), 512);
    EXPECT_EQ(out.rows(), SubsampledLength(40));
  }
}

TEST(VanillaInit, CopiesEverythingAndUnfreezes) {
  AsrModel<float> source(SourceConfig(), 7);
  Checkpoint ckpt = SourceCheckpoint(source);
  AsrModel<float> target(SourceConfig(), 8);
  target.SetAllTrainable(false);
  VanillaInit(ckpt, &target);
  EXPECT_EQ(Checksum(target.Params()), Checksum(source.Params()));
  for (const auto &p : target.Params().All()) EXPECT_TRUE(p->trainable);
  NamedArrays again = ExportParams(target.Params());
  ASSERT_EQ(again.size(), ckpt.params.size());
  for (size_t i = 0; i < again.size(); ++i) EXPECT_EQ(Checksum(again[i].second), Checksum(ckpt.params[i].second));
  TrainSteps(&target, 1);
  EXPECT_NE(Checksum(target.Params()), Checksum(source.Params()));
}

TEST(VanillaInit, VocabularyMismatchNamesOutputLayers) {
  AsrModel<float> source(SourceConfig(), 9);
  ConformerConfig other = SourceConfig();
  other.vocab_size = 12;
  AsrModel<float> target(other, 10);
  try {
    VanillaInit(SourceCheckpoint(source), &target);
    FAIL();
  } catch (const IncompatibleArchitecture &e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("ctc.proj.weight"), std::string::npos) << msg;
    EXPECT_NE(msg.find("decoder.out.weight"), std::string::npos) << msg;
    EXPECT_NE(msg.find("decoder.embed"), std::string::npos) << msg;
  }
}

TEST(Compose, FreezeFlagsCoverExactlyTheExtractor) {
  AsrModel<float> source(SourceConfig(), 11);
  auto extractor = TapPrefix<float>(SourceCheckpoint(source), 3);
  for (bool freeze : {true, false}) {
    auto model = Compose(*extractor, TapConfig(3, freeze), 12);
    int frozen = 0;
    for (const ManifestEntry &e : ParameterManifest(*model)) {
      bool in_extractor = e.name.rfind("extractor.", 0) == 0;
      EXPECT_EQ(e.trainable, !(freeze && in_extractor)) << e.name;
      frozen += !e.trainable;
    }
    EXPECT_EQ(frozen > 0, freeze);
    EXPECT_EQ(Checksum(model->Params(), "extractor."), Checksum(extractor->Params()));
  }
  EXPECT_THROW(Compose(*extractor, TapConfig(2, true), 1), InvalidInput);
}

TEST(Compose, TargetInitDoesNotDependOnTapDepth) {
  TransferModel<float> a(SourceConfig(), TapConfig(1, true), 13), b(SourceConfig(), TapConfig(4, true), 13);
  EXPECT_EQ(Checksum(a.Params(), "target."), Checksum(b.Params(), "target."));
}

TEST(Compose, DimensionMismatchNeedsProjection) {
  TransferConfig t = TapConfig(2, true);
  t.target_config.d_model = 16;
  EXPECT_THROW(TransferModel<float>(SourceConfig(), t, 1), IncompatibleArchitecture);
  t.project_if_mismatch = true;
  TransferModel<float> model(SourceConfig(), t, 1);
  EXPECT_TRUE(model.HasBridge());
  MatrixF enc = Encoded(model, RandomFeats<float>(40, 20, 14));
  EXPECT_EQ(enc.cols(), 16);
  EXPECT_TRUE(model.Params().Find("bridge.proj.weight")->trainable);
}

TEST(Compose, SquareBridgeStartsAsIdentity) {
  TransferConfig plain = TapConfig(2, true), projected = plain;
  projected.project_if_mismatch = true;
  TransferModel<float> a(SourceConfig(), plain, 15), b(SourceConfig(), projected, 15);
  EXPECT_FALSE(a.HasBridge());
  ASSERT_TRUE(b.HasBridge());
  EXPECT_TRUE(b.Params().Find("bridge.proj.weight")->value.isIdentity(0.0f));
  EXPECT_TRUE(b.Params().Find("bridge.proj.bias")->value.isZero(0.0f));
  MatrixF feats = RandomFeats<float>(50, 20, 16);
  EXPECT_TRUE((Encoded(a, feats).array() == Encoded(b, feats).array()).all());
}

TEST(Freeze, FrozenPrefixSurvivesTraining) {
  AsrModel<float> source(SourceConfig(), 17);
  auto extractor = TapPrefix<float>(SourceCheckpoint(source), 2);
  TransferConfig t = TapConfig(2, true);
  t.embed_specaug = SpecAugPolicy{3, 2, 2, 2, 0.0f};
  auto model = Compose(*extractor, t, 18);
  const uint64_t before = Checksum(model->Params(), "extractor.");
  const uint64_t target_before = Checksum(model->Params(), "target.");
  FreezeGuard guard(model->Params());
  EXPECT_GT(guard.NumFrozen(), 0u);
  TrainSteps(model.get(), 5, &guard);
  EXPECT_EQ(Checksum(model->Params(), "extractor."), before);
  EXPECT_NE(Checksum(model->Params(), "target."), target_before);
  for (const auto &p : model->Params().All()) {
    if (!p->trainable) {
      EXPECT_TRUE(p->grad.isZero(0.0f)) << p->name;
    }
  }
}

TEST(Freeze, GuardDetectsMovedParameters) {
  TransferModel<float> model(SourceConfig(), TapConfig(2, true), 19);
  FreezeGuard guard(model.Params());
  EXPECT_NO_THROW(guard.Check(1));
  for (const auto &p : model.Params().All())
    if (!p->trainable) {
      p->grad(0, 0) = 1.0f;
      EXPECT_THROW(guard.Check(2), FreezeViolation);
      p->grad(0, 0) = 0.0f;
      p->value(0, 0) += 1.0f;
      EXPECT_THROW(guard.Check(3), FreezeViolation);
      break;
    }
}

TEST(Freeze, UnfrozenPrefixMovesAfterOneStep) {
  AsrModel<float> source(SourceConfig(), 20);
  auto extractor = TapPrefix<float>(SourceCheckpoint(source), 2);
  auto model = Compose(*extractor, TapConfig(2, false), 21);
  const uint64_t before = Checksum(model->Params(), "extractor.");
  TrainSteps(model.get(), 1);
  EXPECT_NE(Checksum(model->Params(), "extractor."), before);
}

TEST(Compose, EvalModeNeverMasks) {
  TransferConfig masked = TapConfig(2, false), plain = masked;
  masked.embed_specaug = SpecAugPolicy{3, 2, 2, 2, 0.0f};
  TransferModel<float> a(SourceConfig(), masked, 22), b(SourceConfig(), plain, 22);
  MatrixF feats = RandomFeats<float>(60, 20, 23);
  EXPECT_TRUE((Encoded(a, feats).array() == Encoded(b, feats).array()).all());
  Rng rng(1);
  ForwardContext train{true, &rng, 0.0};
  EXPECT_FALSE((Encoded(a, feats, train).array() == Encoded(b, feats, ForwardContext{}).array()).all());
}

TEST(Compose, EmbeddingMaskIsTheFeatureSpecAug) {
  TransferConfig t = TapConfig(2, true);
  for (SpecAugPolicy policy : {SpecAugPolicy{3, 1, 2, 2, 0.0f}, SpecAugPolicy{20, 20, 2, 2, 0.0f},
                               SpecAugPolicy{3, 2, 1, 1, -0.5f}}) {
    t.embed_specaug = policy;
    TransferModel<float> model(SourceConfig(), t, 24);
    MatrixF h = RandomFeats<float>(15, 32, 25);
    for (uint64_t seed = 0; seed < 20; ++seed) {
      Graph<float> g(false);
      MatrixF got = model.MaskEmbeddings(g.Input(h), seed).value();
      MatrixF want = ApplySpecAug<float>(h, policy, seed);
      ASSERT_TRUE((got.array() == want.array()).all()) << seed;
    }
  }
}

// Finite differences through extractor, bridge and target in 64-bit.
TEST(Gradient, FlowsThroughTheBridge) {
  ConformerConfig source;
  source.input_dim = 4;
  source.d_model = 8;
  source.attention_heads = 2;
  source.num_encoder_layers = 2;
  source.encoder_ff_units = 16;
  source.decoder_ff_units = 16;
  source.conv_kernel = 3;
  source.vocab_size = 5;
  source.dropout = 0.0;
  TransferConfig t;
  t.tap_layer_K = 1;
  t.freeze_prefix = false;
  t.project_if_mismatch = true;
  t.target_config = source;
  t.target_config.d_model = 6;
  t.target_config.num_encoder_layers = 1;
  t.target_config.num_decoder_layers = 1;
  TransferModel<double> model(source, t, 26);
  ASSERT_TRUE(model.HasBridge());
  MatrixD feats = RandomFeats<double>(12, 4, 27);
  std::vector<oracle::GradientMismatch> per_tensor;
  oracle::CheckGradients(&model, feats, {4}, &per_tensor);
  int checked_extractor = 0;
  for (const auto &m : per_tensor) {
    EXPECT_LT(m.rel_error, 1e-4) << m.name;
    if (m.name.rfind("extractor.", 0) == 0 && model.Params().Find(m.name)->grad.norm() > 0) ++checked_extractor;
  }
  EXPECT_GT(checked_extractor, 0);
}

TEST(DirectDecode, LoadsFrozenSourceModel) {
  AsrModel<float> source(SourceConfig(), 28);
  Checkpoint ckpt = SourceCheckpoint(source);
  auto model = DirectDecodeModel<float>(ckpt);
  for (const auto &p : model->Params().All()) EXPECT_FALSE(p->trainable) << p->name;
  EXPECT_EQ(Checksum(model->Params()), Checksum(source.Params()));
  std::stringstream ss;
  WriteCheckpoint(ckpt, ss);
  std::string bytes = ss.str();
  std::istringstream truncated(bytes.substr(0, bytes.size() - 10));
  EXPECT_THROW(DirectDecodeModel<float>(ReadCheckpoint(truncated)), LoadError);
  Checkpoint wrong = ckpt;
  wrong.params.pop_back();
  EXPECT_THROW(DirectDecodeModel<float>(wrong), LoadError);
}

TEST(Checkpoint, TransferModelRoundTrips) {
  TransferConfig t = TapConfig(3, true);
  t.embed_specaug = SpecAugPolicy{3, 1, 2, 2, 0.0f};
  TransferModel<float> model(SourceConfig(), t, 29);
  Tokenizer tok = Tokenizer::Build({"abc"});
  ASSERT_EQ(tok.Size(), 8);
  Checkpoint ckpt = MakeCheckpoint(model, tok, 42);
  std::unique_ptr<Recognizer<float>> back = LoadRecognizer<float>(ckpt);
  EXPECT_EQ(back->Kind(), "transfer");
  EXPECT_EQ(Checksum(back->Params()), Checksum(model.Params()));
  auto *tm = dynamic_cast<TransferModel<float> *>(back.get());
  ASSERT_NE(tm, nullptr);
  EXPECT_EQ(tm->Config().tap_layer_K, 3);
  EXPECT_TRUE(tm->Config().embed_specaug.has_value());
  MatrixF feats = RandomFeats<float>(30, 20, 30);
  EXPECT_TRUE((Encoded(*back, feats).array() == Encoded(model, feats).array()).all());
}

}  // namespace
}  // namespace enctap
