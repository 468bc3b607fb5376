// enctap/experiments/evaluate.h

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

#ifndef ENCTAP_EXPERIMENTS_EVALUATE_H_
#define ENCTAP_EXPERIMENTS_EVALUATE_H_

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "enctap/experiments/corpus.h"
#include "enctap/objective/beam-search.h"
#include "enctap/scoring/score.h"
#include "enctap/transfer/transfer.h"

namespace enctap {

/// Joint CTC/attention beam search over one utterance, no LM. The returned
/// tokens exclude sos/eos.
template <typename Real>
Hypothesis DecodeUtterance(const Recognizer<Real> &model, const Matrix<Real> &feats, int beam_size,
                           double ctc_weight) {
  Graph<Real> g(/*grad_enabled=*/false);
  const ForwardContext eval;
  Var<Real> enc = model.Encode(g, feats, eval);
  MatrixD ctc = model.CtcLogProbs(enc).value().template cast<double>();
  NextTokenFn next = [&](const std::vector<int> &prefix) {
    std::vector<int> full{Tokenizer::kSos};
    full.insert(full.end(), prefix.begin(), prefix.end());
    Graph<Real> dg(/*grad_enabled=*/false);
    Var<Real> memory = dg.Constant(enc.value());
    Matrix<Real> logits = model.DecoderLogits(memory, full, eval).value();
    RowVector<double> last = logits.row(logits.rows() - 1).template cast<double>();
    const double mx = last.maxCoeff();
    return RowVector<double>((last.array() - (mx + std::log((last.array() - mx).exp().sum()))).matrix());
  };
  BeamOptions opts;
  opts.beam_size = beam_size;
  opts.ctc_weight = ctc_weight;
  opts.blank = Tokenizer::kBlank;
  opts.sos = Tokenizer::kSos;
  opts.eos = Tokenizer::kEos;
  opts.unk = Tokenizer::kUnk;
  return JointBeamSearch(ctc, next, opts);
}

struct EvalOutput {
  ScoreReport report;
  std::vector<ScoredPair> pairs;  // ref/hyp text per utterance
};

/// Decodes and scores `utts`. A reference containing symbols the model
/// cannot emit is an error, not a silent unk.
inline EvalOutput EvaluateModel(const Recognizer<float> &model, const Tokenizer &tokenizer,
                                const FrontendConfig &frontend, const std::vector<Utterance> &utts,
                                const DecodeConfig &decode) {
  if (tokenizer.Size() != model.VocabSize())
    throw IncompatibleArchitecture(StrCat("tokenizer has ", tokenizer.Size(), " symbols but the model outputs ",
                                          model.VocabSize()));
  EvalOutput out;
  for (const auto &u : utts) {
    int num_unk = 0;
    tokenizer.Encode(u.transcript, &num_unk);
    if (num_unk > 0)
      throw InvalidInput(StrCat("vocabulary mismatch: reference of ", u.utt_id, " has ", num_unk,
                                " symbol(s) not in the checkpoint vocabulary"));
    Hypothesis hyp = DecodeUtterance(model, ComputeFeatures(u.Audio(), frontend), decode.beam, decode.ctc_weight);
    out.pairs.push_back({u.utt_id, u.transcript, tokenizer.Decode(hyp.tokens)});
  }
  out.report = ScoreCorpus(out.pairs, decode.char_units ? ScoreUnit::kChar : ScoreUnit::kWord);
  return out;
}

/// Writes <prefix>.hyp (utt_id<TAB>hypothesis) and <prefix>.csv.
inline void WriteEvalOutput(const EvalOutput &out, const std::string &prefix) {
  std::filesystem::path p(prefix);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream hyp(prefix + ".hyp");
  if (!hyp) throw Error(StrCat("cannot write ", prefix, ".hyp"));
  for (const auto &pair : out.pairs) hyp << pair.utt_id << '\t' << pair.hyp << '\n';
  WriteScoreCsv(out.report, prefix + ".csv");
}

/// Loads a checkpoint and evaluates it with the frontend it was trained
/// with.
inline EvalOutput EvaluateCheckpoint(const std::string &checkpoint, const std::vector<Utterance> &utts,
                                     const DecodeConfig &decode) {
  Checkpoint ckpt = LoadCheckpoint(checkpoint);
  FrontendConfig frontend = FrontendConfig::FromKv("frontend.", ckpt.header);
  auto model = LoadRecognizer<float>(ckpt);
  return EvaluateModel(*model, Tokenizer::FromSymbols(ckpt.vocabulary), frontend, utts, decode);
}

}  // namespace enctap

#endif  // ENCTAP_EXPERIMENTS_EVALUATE_H_
