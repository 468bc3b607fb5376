// enctap/objective/ctc.h

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

#ifndef ENCTAP_OBJECTIVE_CTC_H_
#define ENCTAP_OBJECTIVE_CTC_H_

#include <cmath>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "enctap/autograd/ops.h"
#include "enctap/base/error.h"
#include "enctap/base/matrix.h"

namespace enctap {

inline constexpr int kBlankId = 0;

/// A decoded token sequence (no blanks, no sos/eos) with its log score.
struct Hypothesis {
  std::vector<int> tokens;
  double score = 0.0;
};

template <typename Real>
struct CtcResult {
  Real loss;        // -log p(target | input); +inf when unreachable
  bool reachable;
  Matrix<Real> grad;  // d loss / d log_probs, T x V (zero when unreachable)
};

/// CTC negative log-likelihood by the forward-backward recursion in log
/// space. `log_probs` is T x V with the blank in column `blank`. The
/// gradient is taken w.r.t. the log_probs entries treated as free inputs.
template <typename Real>
CtcResult<Real> CtcLossAndGrad(const Matrix<Real> &log_probs, std::span<const int> target, int blank = kBlankId) {
  constexpr Real kNegInf = -std::numeric_limits<Real>::infinity();
  const int t_len = static_cast<int>(log_probs.rows());
  const int vocab = static_cast<int>(log_probs.cols());
  for (int tok : target)
    if (tok < 0 || tok >= vocab || tok == blank) throw InvalidInput(StrCat("CTC target id ", tok, " is invalid"));

  CtcResult<Real> res{std::numeric_limits<Real>::infinity(), false, Matrix<Real>::Zero(t_len, vocab)};
  if (t_len == 0) return res;

  // Extended label sequence: blank, l1, blank, l2, ..., blank.
  const int s_len = 2 * static_cast<int>(target.size()) + 1;
  std::vector<int> ext(s_len, blank);
  for (size_t u = 0; u < target.size(); ++u) ext[2 * u + 1] = target[u];
  auto can_skip = [&](int s) { return s >= 2 && ext[s] != blank && ext[s] != ext[s - 2]; };

  Matrix<Real> alpha = Matrix<Real>::Constant(t_len, s_len, kNegInf);
  alpha(0, 0) = log_probs(0, ext[0]);
  if (s_len > 1) alpha(0, 1) = log_probs(0, ext[1]);
  for (int t = 1; t < t_len; ++t) {
    for (int s = 0; s < s_len; ++s) {
      Real a = alpha(t - 1, s);
      if (s >= 1) a = LogAdd(a, alpha(t - 1, s - 1));
      if (can_skip(s)) a = LogAdd(a, alpha(t - 1, s - 2));
      if (a != kNegInf) alpha(t, s) = a + log_probs(t, ext[s]);
    }
  }
  Real log_p = alpha(t_len - 1, s_len - 1);
  if (s_len > 1) log_p = LogAdd(log_p, alpha(t_len - 1, s_len - 2));
  if (log_p == kNegInf) return res;

  Matrix<Real> beta = Matrix<Real>::Constant(t_len, s_len, kNegInf);
  beta(t_len - 1, s_len - 1) = log_probs(t_len - 1, ext[s_len - 1]);
  if (s_len > 1) beta(t_len - 1, s_len - 2) = log_probs(t_len - 1, ext[s_len - 2]);
  for (int t = t_len - 2; t >= 0; --t) {
    for (int s = 0; s < s_len; ++s) {
      Real b = beta(t + 1, s);
      if (s + 1 < s_len) b = LogAdd(b, beta(t + 1, s + 1));
      if (s + 2 < s_len && can_skip(s + 2)) b = LogAdd(b, beta(t + 1, s + 2));
      if (b != kNegInf) beta(t, s) = b + log_probs(t, ext[s]);
    }
  }

  res.loss = -log_p;
  res.reachable = true;
  for (int t = 0; t < t_len; ++t) {
    for (int s = 0; s < s_len; ++s) {
      Real ab = alpha(t, s) + beta(t, s);
      if (ab == kNegInf) continue;
      res.grad(t, ext[s]) -= std::exp(ab - log_probs(t, ext[s]) - log_p);
    }
  }
  return res;
}

template <typename Real>
Real CtcLoss(const Matrix<Real> &log_probs, std::span<const int> target, int blank = kBlankId) {
  return CtcLossAndGrad(log_probs, target, blank).loss;
}

namespace ag {
/// Differentiable CTC loss node over a T x V log-probability node.
template <typename Real>
Var<Real> CtcLoss(Var<Real> log_probs, std::span<const int> target, int blank = kBlankId) {
  CtcResult<Real> r = CtcLossAndGrad(log_probs.value(), target, blank);
  return ExternalLoss(log_probs, r.loss, std::move(r.grad));
}
}  // namespace ag

/// Best-path decoding: per-frame argmax, merge repeats, drop blanks. The
/// score is the log-probability of the best path.
template <typename Real>
Hypothesis GreedyCtcDecode(const Matrix<Real> &log_probs, int blank = kBlankId) {
  Hypothesis hyp;
  int prev = -1;
  for (Eigen::Index t = 0; t < log_probs.rows(); ++t) {
    Eigen::Index best;
    hyp.score += static_cast<double>(log_probs.row(t).maxCoeff(&best));
    int tok = static_cast<int>(best);
    if (tok != blank && tok != prev) hyp.tokens.push_back(tok);
    prev = tok;
  }
  return hyp;
}

/// Incremental CTC prefix probabilities for label-synchronous beam search.
/// A State stores, for one prefix g, the log-probabilities r_n(t) / r_b(t)
/// that the first t+1 frames emit exactly g ending in a non-blank / blank,
/// plus log P(g is a prefix of the label sequence).
template <typename Real>
class CtcPrefixScorer {
 public:
  struct State {
    std::vector<Real> r_nonblank;
    std::vector<Real> r_blank;
    Real prefix_score = 0;
    int last = -1;  // last token of the prefix, -1 when empty
  };

  explicit CtcPrefixScorer(const Matrix<Real> &log_probs, int blank = kBlankId) : lp_(log_probs), blank_(blank) {
    if (lp_.rows() == 0) throw InvalidInput("CTC prefix scorer needs at least one frame");
  }

  State Initial() const {
    const int t_len = static_cast<int>(lp_.rows());
    State s;
    s.r_nonblank.assign(t_len, kNegInf);
    s.r_blank.resize(t_len);
    Real acc = 0;
    for (int t = 0; t < t_len; ++t) {
      acc += lp_(t, blank_);
      s.r_blank[t] = acc;
    }
    s.prefix_score = 0;
    return s;
  }

  /// Prefix score of g + c (and the state of g + c).
  State Extend(const State &g, int c) const {
    const int t_len = static_cast<int>(lp_.rows());
    State h;
    h.last = c;
    h.r_nonblank.assign(t_len, kNegInf);
    h.r_blank.assign(t_len, kNegInf);
    h.r_nonblank[0] = g.last < 0 ? lp_(0, c) : kNegInf;
    Real psi = h.r_nonblank[0];
    for (int t = 1; t < t_len; ++t) {
      Real phi = c == g.last ? g.r_blank[t - 1] : LogAdd(g.r_blank[t - 1], g.r_nonblank[t - 1]);
      h.r_nonblank[t] = LogAdd(h.r_nonblank[t - 1], phi) + lp_(t, c);
      h.r_blank[t] = LogAdd(h.r_blank[t - 1], h.r_nonblank[t - 1]) + lp_(t, blank_);
      psi = LogAdd(psi, phi + lp_(t, c));
    }
    h.prefix_score = psi;
    return h;
  }

  /// log P(label sequence == g).
  Real FinalScore(const State &g) const {
    const int last = static_cast<int>(lp_.rows()) - 1;
    return LogAdd(g.r_nonblank[last], g.r_blank[last]);
  }

 private:
  static constexpr Real kNegInf = -std::numeric_limits<Real>::infinity();
  const Matrix<Real> &lp_;
  int blank_;
};

}  // namespace enctap

#endif  // ENCTAP_OBJECTIVE_CTC_H_
