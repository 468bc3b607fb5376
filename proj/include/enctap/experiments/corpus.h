// enctap/experiments/corpus.h

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

#ifndef ENCTAP_EXPERIMENTS_CORPUS_H_
#define ENCTAP_EXPERIMENTS_CORPUS_H_

#include <string>
#include <vector>

#include "enctap/data/manifest.h"
#include "enctap/data/synth.h"
#include "enctap/data/tokenizer.h"
#include "enctap/experiments/config.h"
#include "enctap/frontend/mel.h"
#include "enctap/frontend/pitch.h"

namespace enctap {

struct CorpusSplits {
  std::vector<Utterance> train, dev, test;
};

/// Synthetic fixture splits or the three manifests named in `data`.
/// The source fixture has no dev split; its test split doubles as dev.
inline CorpusSplits LoadCorpus(const DataConfig &data) {
  CorpusSplits s;
  if (!data.UsesFixture()) {
    s.train = LoadManifest(data.train_manifest);
    if (!data.dev_manifest.empty()) s.dev = LoadManifest(data.dev_manifest);
    if (!data.test_manifest.empty()) s.test = LoadManifest(data.test_manifest);
    return s;
  }
  const FixtureSizes &n = data.sizes;
  if (data.fixture == "source") {
    s.train = FixtureCorpus(FixtureSplit::kSourceTrain, n.source_train, data.corpus_seed);
    s.test = FixtureCorpus(FixtureSplit::kSourceTest, n.source_test, data.corpus_seed);
    s.dev = s.test;
  } else {
    s.train = FixtureCorpus(FixtureSplit::kTargetTrain, n.target_train, data.corpus_seed);
    s.dev = FixtureCorpus(FixtureSplit::kTargetDev, n.target_dev, data.corpus_seed);
    s.test = FixtureCorpus(FixtureSplit::kTargetTest, n.target_test, data.corpus_seed);
  }
  return s;
}

inline MatrixF ComputeFeatures(const std::vector<int16_t> &wave, const FrontendConfig &frontend) {
  MelOptions mel;
  mel.n_mels = frontend.n_mels;
  AcousticFeatures f = ComputeLogMel(wave, mel);
  if (frontend.mean_norm) MeanNormalize(&f);
  if (frontend.pitch) f = AppendPitch(f, ComputePitch(wave));
  return f.values;
}

/// A training/eval item: features plus token ids (no sos/eos).
struct Example {
  std::string utt_id;
  std::string transcript;
  MatrixF feats;
  std::vector<int> tokens;
};

/// Featurizes and tokenizes `utts`. Transcripts with symbols outside the
/// tokenizer are rejected: the model could never produce them.
inline std::vector<Example> MakeExamples(const std::vector<Utterance> &utts, const FrontendConfig &frontend,
                                         const Tokenizer &tokenizer) {
  std::vector<Example> out;
  out.reserve(utts.size());
  for (const auto &u : utts) {
    int num_unk = 0;
    Example ex{u.utt_id, u.transcript, ComputeFeatures(u.Audio(), frontend), tokenizer.Encode(u.transcript, &num_unk),};
    if (num_unk > 0)
      throw InvalidInput(StrCat("vocabulary mismatch: transcript of ", u.utt_id, " has ", num_unk,
                                " symbol(s) outside the model vocabulary"));
    out.push_back(std::move(ex));
  }
  return out;
}

inline std::vector<std::string> Transcripts(const std::vector<Utterance> &utts) {
  std::vector<std::string> out;
  for (const auto &u : utts) out.push_back(u.transcript);
  return out;
}

}  // namespace enctap

#endif  // ENCTAP_EXPERIMENTS_CORPUS_H_
