// enctap/objective/losses.h

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

#ifndef ENCTAP_OBJECTIVE_LOSSES_H_
#define ENCTAP_OBJECTIVE_LOSSES_H_

#include <cmath>
#include <span>
#include <utility>

#include "enctap/autograd/ops.h"
#include "enctap/base/error.h"
#include "enctap/base/matrix.h"

namespace enctap {

/// Mean teacher-forced cross-entropy of `logits` (len x V) against
/// `targets` (len ids, normally ending in eos). With smoothing eps the
/// target distribution is (1-eps) one-hot + eps/V uniform.
template <typename Real>
std::pair<Real, Matrix<Real>> CrossEntropyAndGrad(const Matrix<Real> &logits, std::span<const int> targets,
                                                  Real label_smoothing = 0) {
  if (logits.rows() != static_cast<Eigen::Index>(targets.size()))
    throw InvalidInput(StrCat("cross-entropy: ", logits.rows(), " logit rows vs ", targets.size(), " targets"));
  if (targets.empty()) throw InvalidInput("cross-entropy over an empty sequence");
  const Eigen::Index n = logits.rows(), vocab = logits.cols();
  Matrix<Real> grad(n, vocab);
  Real total = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    int y = targets[static_cast<size_t>(i)];
    if (y < 0 || y >= vocab) throw InvalidInput(StrCat("cross-entropy target ", y, " out of range"));
    auto row = logits.row(i).array();
    Real mx = row.maxCoeff();
    Real lse = mx + std::log((row - mx).exp().sum());
    auto logp = row - lse;
    Real smooth = label_smoothing / Real(vocab);
    total -= (Real(1) - label_smoothing) * logp(y) + smooth * logp.sum();
    grad.row(i) = logp.exp().matrix();
    grad.row(i).array() -= smooth;
    grad(i, y) -= Real(1) - label_smoothing;
  }
  grad /= Real(n);
  return {total / Real(n), std::move(grad)};
}

template <typename Real>
Real AttentionCrossEntropy(const Matrix<Real> &logits, std::span<const int> targets, Real label_smoothing = 0) {
  return CrossEntropyAndGrad(logits, targets, label_smoothing).first;
}

/// lambda * ctc + (1 - lambda) * att; lambda must lie in [0, 1].
template <typename Real>
Real JointLoss(Real ctc, Real att, Real lambda) {
  if (!(lambda >= Real(0) && lambda <= Real(1))) throw InvalidInput(StrCat("CTC weight ", lambda, " not in [0,1]"));
  if (lambda == Real(1)) return ctc;
  if (lambda == Real(0)) return att;
  return lambda * ctc + (Real(1) - lambda) * att;
}

namespace ag {

template <typename Real>
Var<Real> CrossEntropy(Var<Real> logits, std::span<const int> targets, Real label_smoothing = 0) {
  auto [loss, grad] = CrossEntropyAndGrad(logits.value(), targets, label_smoothing);
  return ExternalLoss(logits, loss, std::move(grad));
}

template <typename Real>
Var<Real> JointLoss(Var<Real> ctc, Var<Real> att, Real lambda) {
  enctap::JointLoss<Real>(0, 0, lambda);  // validates lambda
  return WeightedSum<Real>({ctc, att}, {lambda, Real(1) - lambda});
}

}  // namespace ag
}  // namespace enctap

#endif  // ENCTAP_OBJECTIVE_LOSSES_H_
