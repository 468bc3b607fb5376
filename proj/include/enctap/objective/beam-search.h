// enctap/objective/beam-search.h

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

#ifndef ENCTAP_OBJECTIVE_BEAM_SEARCH_H_
#define ENCTAP_OBJECTIVE_BEAM_SEARCH_H_

#include <algorithm>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "enctap/base/error.h"
#include "enctap/base/matrix.h"
#include "enctap/objective/ctc.h"

namespace enctap {

struct BeamOptions {
  int beam_size = 4;
  double ctc_weight = 0.3;
  int blank = 0;
  int sos = 2;
  int eos = 3;
  // Never proposed when >= 0 (the unknown symbol is not a training target).
  int unk = -1;
  // Maximum output length; <= 0 means the number of encoder frames.
  int max_len = 0;
};

/// Log-probabilities (1 x V) of the next token given sos + prefix.
using NextTokenFn = std::function<RowVector<double>(const std::vector<int> &prefix)>;

/// Label-synchronous joint CTC/attention beam search without any language
/// model. A partial hypothesis h = g + c is scored
///   score(h) = score(g) + w * (ctc_prefix(h) - ctc_prefix(g))
///                       + (1 - w) * log p_att(c | g),
/// and ending g with eos uses the CTC full-sequence probability of g.
/// Both increments are <= 0, so once the best finished hypothesis scores at
/// least as high as every live one the search can stop without changing
/// the result.
///
/// With w == 0 the CTC scorer is not evaluated at all.
namespace internal {

inline Hypothesis FixedWidthBeamSearch(const Matrix<double> &ctc_log_probs, const NextTokenFn &next_token,
                                       const BeamOptions &opts) {
  const double w = opts.ctc_weight;
  const bool use_ctc = w > 0.0;
  const int vocab = static_cast<int>(ctc_log_probs.cols());
  const int max_len = opts.max_len > 0 ? opts.max_len : static_cast<int>(ctc_log_probs.rows());

  CtcPrefixScorer<double> scorer(ctc_log_probs, opts.blank);
  using State = CtcPrefixScorer<double>::State;
  struct Live {
    std::vector<int> tokens;
    double score;
    State ctc;
  };
  struct Candidate {
    double score;
    int parent;
    int token;
  };

  std::vector<Live> live;
  live.push_back({{}, 0.0, use_ctc ? scorer.Initial() : State{}});
  std::optional<Hypothesis> best_ended;

  auto better = [](const Candidate &a, const Candidate &b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.parent != b.parent) return a.parent < b.parent;
    return a.token < b.token;
  };

  for (int step = 0; step <= max_len && !live.empty(); ++step) {
    std::vector<Candidate> cands;
    std::vector<std::vector<State>> ext_states(live.size());
    for (size_t h = 0; h < live.size(); ++h) {
      const Live &hyp = live[h];
      RowVector<double> att = next_token(hyp.tokens);
      if (att.size() != vocab) throw InvalidInput("decoder vocabulary differs from CTC vocabulary");
      if (use_ctc) ext_states[h].resize(vocab);
      for (int c = 0; c < vocab; ++c) {
        if (c == opts.blank || c == opts.sos || c == opts.unk) continue;
        // At the length limit only eos is allowed.
        if (step == max_len && c != opts.eos) continue;
        double ctc_inc = 0.0;
        if (use_ctc) {
          if (c == opts.eos) {
            ctc_inc = scorer.FinalScore(hyp.ctc) - hyp.ctc.prefix_score;
          } else {
            ext_states[h][c] = scorer.Extend(hyp.ctc, c);
            ctc_inc = ext_states[h][c].prefix_score - hyp.ctc.prefix_score;
          }
        }
        double s = hyp.score + w * ctc_inc + (1.0 - w) * att[c];
        if (s == -std::numeric_limits<double>::infinity() || std::isnan(s)) continue;
        cands.push_back({s, static_cast<int>(h), c});
      }
    }
    const size_t keep = std::min(cands.size(), static_cast<size_t>(opts.beam_size));
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(), better);
    std::vector<Live> next;
    for (size_t i = 0; i < keep; ++i) {
      const Candidate &c = cands[i];
      const Live &parent = live[c.parent];
      if (c.token == opts.eos) {
        if (!best_ended || c.score > best_ended->score) best_ended = Hypothesis{parent.tokens, c.score};
        continue;
      }
      Live child{parent.tokens, c.score, use_ctc ? std::move(ext_states[c.parent][c.token]) : State{}};
      child.tokens.push_back(c.token);
      next.push_back(std::move(child));
    }
    live = std::move(next);
    if (best_ended && !live.empty()) {
      double best_live = -std::numeric_limits<double>::infinity();
      for (const Live &l : live) best_live = std::max(best_live, l.score);
      if (best_ended->score >= best_live) break;
    }
  }
  if (!best_ended) return Hypothesis{{}, -std::numeric_limits<double>::infinity()};
  return *best_ended;
}

}  // namespace internal

/// Fixed-width pruning alone is not monotone in the width, so the result is
/// the best hypothesis over widths 1..beam_size (earliest width wins ties).
/// This makes a wider beam never return a lower-scoring hypothesis.
inline Hypothesis JointBeamSearch(const Matrix<double> &ctc_log_probs, const NextTokenFn &next_token,
                                  const BeamOptions &opts) {
  if (opts.beam_size < 1) throw InvalidInput(StrCat("beam size must be >= 1, got ", opts.beam_size));
  if (!(opts.ctc_weight >= 0.0 && opts.ctc_weight <= 1.0))
    throw InvalidInput(StrCat("CTC weight ", opts.ctc_weight, " not in [0,1]"));
  Hypothesis best{{}, -std::numeric_limits<double>::infinity()};
  bool any = false;
  for (int b = 1; b <= opts.beam_size; ++b) {
    BeamOptions o = opts;
    o.beam_size = b;
    Hypothesis h = internal::FixedWidthBeamSearch(ctc_log_probs, next_token, o);
    if (!any || h.score > best.score) best = std::move(h), any = true;
  }
  return best;
}

}  // namespace enctap

#endif  // ENCTAP_OBJECTIVE_BEAM_SEARCH_H_
