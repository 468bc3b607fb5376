// tests/data-test.cc

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

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "enctap/data/manifest.h"
#include "enctap/data/synth.h"
#include "enctap/data/tokenizer.h"
#include "enctap/frontend/mel.h"

namespace enctap {
namespace {

namespace fs = std::filesystem;

class ManifestTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("enctap-manifest-" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string Write(const std::string &name, const std::string &text) {
    std::string path = (dir_ / name).string();
    std::ofstream(path) << text;
    return path;
  }
  fs::path dir_;
};

TEST_F(ManifestTest, ParsesInFileOrder) {
  auto utts = LoadManifest(Write("m.tsv", "c\ta.wav\tone\n\nb\t/abs/b.wav\ttwo  words\na\tsub/c.wav\tx\n"));
  ASSERT_EQ(utts.size(), 3u);
  EXPECT_EQ(utts[0].utt_id, "c");
  EXPECT_EQ(utts[1].utt_id, "b");
  EXPECT_EQ(utts[2].utt_id, "a");
  EXPECT_EQ(utts[0].audio_path, (dir_ / "a.wav").string());
  EXPECT_EQ(utts[1].audio_path, "/abs/b.wav");
  EXPECT_EQ(utts[1].transcript, "two words");
}

TEST_F(ManifestTest, ErrorsCiteTheLine) {
  std::string path = Write("bad.tsv", "a\tx.wav\tfine\nb\tonly-two-fields\n");
  try {
    LoadManifest(path);
    FAIL() << "expected a parse error";
  } catch (const ParseError &e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
  EXPECT_THROW(LoadManifest(Write("dup.tsv", "a\tx.wav\tt\na\ty.wav\tu\n")), ParseError);
  EXPECT_THROW(LoadManifest(Write("empty.tsv", "a\tx.wav\t   \n")), ParseError);
}

TEST_F(ManifestTest, WriteThenLoadRoundTrips) {
  std::vector<Utterance> utts = FixtureCorpus(FixtureSplit::kTargetDev, 5, 3);
  for (auto &u : utts) {
    u.audio_path = (dir_ / (u.utt_id + ".wav")).string();
    WriteWav(u.audio_path, u.pcm);
  }
  std::string path = (dir_ / "rt.tsv").string();
  WriteManifest(path, utts);
  auto loaded = LoadManifest(path);
  ASSERT_EQ(loaded.size(), utts.size());
  for (size_t i = 0; i < utts.size(); ++i) {
    EXPECT_EQ(loaded[i].utt_id, utts[i].utt_id);
    EXPECT_EQ(loaded[i].audio_path, utts[i].audio_path);
    EXPECT_EQ(loaded[i].transcript, utts[i].transcript);
    EXPECT_EQ(loaded[i].Audio(), utts[i].pcm);
  }
}

TEST(Tokenizer, SortedVocabularyWithReservedIds) {
  Tokenizer tok = Tokenizer::Build({"ab", "ba"});
  std::vector<std::string> expected{"<blank>", "<unk>", "<sos>", "<eos>", " ", "a", "b"};
  EXPECT_EQ(tok.Symbols(), expected);
  EXPECT_EQ(tok.Encode("ab"), (std::vector<int>{5, 6}));
  EXPECT_EQ(Tokenizer::Build({"ba", "ab"}), tok);
  EXPECT_THROW(Tokenizer::Build({}), InvalidInput);
}

TEST(Tokenizer, RoundTripAndUnknowns) {
  Tokenizer tok = Tokenizer::Build({"hello world", "abc"});
  EXPECT_EQ(tok.Decode(tok.Encode("we cold")), "we cold");
  int unk = 0;
  auto ids = tok.Encode("xyz", &unk);
  EXPECT_EQ(unk, 3);
  for (int id : ids) EXPECT_EQ(id, Tokenizer::kUnk);
  EXPECT_EQ(Tokenizer::FromSymbols(tok.Symbols()), tok);
}

TEST(Synth, Deterministic) {
  auto a = SynthGenerate(SourceDomain(), 4, 99), b = SynthGenerate(SourceDomain(), 4, 99);
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].transcript, b[i].transcript);
    EXPECT_EQ(a[i].pcm, b[i].pcm);
  }
  EXPECT_NE(SynthGenerate(SourceDomain(), 1, 100)[0].pcm, a[0].pcm);
}

TEST(Synth, DurationIsTokenCountTimes120ms) {
  for (const auto &u : SynthGenerate(TargetDomain(), 10, 5)) {
    EXPECT_EQ(u.pcm.size(), u.transcript.size() * 1920u);
    EXPECT_GE(u.transcript.size(), 4u);
    EXPECT_LE(u.transcript.size(), 10u);
    for (char c : u.transcript) EXPECT_NE(TargetDomain().token_inventory.find(c), std::string::npos);
  }
}

TEST(Synth, ChannelOnlyChangesAudio) {
  DomainSpec narrow = SourceDomain();
  narrow.low_hz = 300;
  narrow.high_hz = 3400;
  auto a = SynthGenerate(SourceDomain(), 5, 7), b = SynthGenerate(narrow, 5, 7);
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].transcript, b[i].transcript);
    EXPECT_NE(a[i].pcm, b[i].pcm);
  }
}

TEST(Synth, ValidatesDomains) {
  DomainSpec d = SourceDomain();
  d.high_hz = 9000;
  EXPECT_THROW(d.Validate(), InvalidInput);
  d = SourceDomain();
  d.bigram_weights.row(3).setZero();
  EXPECT_THROW(d.Validate(), InvalidInput);
}

// Frames lying entirely inside one token are classified by the nearest
// per-token centroid of log-mel vectors learned from other utterances.
TEST(Synth, TokensAreSeparableInMelSpace) {
  DomainSpec clean = SourceDomain();
  clean.noise_snr_db = 120.0;
  auto utts = SynthGenerate(clean, 120, 2024);
  std::map<char, std::pair<Eigen::VectorXd, int>> centroids;
  std::vector<std::pair<Eigen::VectorXd, char>> held_out;
  for (size_t u = 0; u < utts.size(); ++u) {
    MatrixF f = ComputeLogMel(utts[u].pcm).values;
    for (int t = 0; t < f.rows(); ++t) {
      int first = t * 160, last = t * 160 + 399;
      if (first / 1920 != last / 1920) continue;
      char label = utts[u].transcript[first / 1920];
      Eigen::VectorXd v = f.row(t).transpose().cast<double>();
      if (u < 60) {
        auto &[sum, n] = centroids[label];
        if (n == 0) sum = Eigen::VectorXd::Zero(v.size());
        sum += v;
        ++n;
      } else {
        held_out.emplace_back(v, label);
      }
    }
  }
  int correct = 0;
  for (const auto &[v, label] : held_out) {
    char best = 0;
    double best_d = 1e300;
    for (const auto &[c, sn] : centroids) {
      double d = (v - sn.first / sn.second).squaredNorm();
      if (d < best_d) best_d = d, best = c;
    }
    correct += best == label;
  }
  EXPECT_GE(double(correct) / held_out.size(), 0.95) << correct << "/" << held_out.size();
}

}  // namespace
}  // namespace enctap
