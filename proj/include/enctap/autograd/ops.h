// enctap/autograd/ops.h

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

#ifndef ENCTAP_AUTOGRAD_OPS_H_
#define ENCTAP_AUTOGRAD_OPS_H_

#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "enctap/autograd/graph.h"
#include "enctap/base/error.h"
#include "enctap/base/random.h"

namespace enctap {
namespace ag {

namespace internal {
template <typename Real>
void CheckSameShape(const Var<Real> &a, const Var<Real> &b, const char *op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidInput(StrCat(op, ": shape mismatch ", a.rows(), "x", a.cols(), " vs ", b.rows(), "x", b.cols()));
}
}  // namespace internal

/// a * b.
template <typename Real>
Var<Real> MatMul(Var<Real> a, Var<Real> b) {
  if (a.cols() != b.rows())
    throw InvalidInput(StrCat("MatMul: ", a.rows(), "x", a.cols(), " * ", b.rows(), "x", b.cols()));
  Matrix<Real> v;
  v.noalias() = a.value() * b.value();
  Var<Real> out = a.graph->Make(std::move(v), a.requires_grad() || b.requires_grad());
  if (out.requires_grad()) {
    Node<Real> *an = a.node, *bn = b.node, *on = out.node;
    on->backward = [an, bn, on] {
      if (an->requires_grad) an->G().noalias() += on->G() * bn->V().transpose();
      if (bn->requires_grad) bn->G().noalias() += an->V().transpose() * on->G();
    };
  }
  return out;
}

/// a * b^T.
template <typename Real>
Var<Real> MatMulBT(Var<Real> a, Var<Real> b) {
  if (a.cols() != b.cols())
    throw InvalidInput(StrCat("MatMulBT: ", a.rows(), "x", a.cols(), " * (", b.rows(), "x", b.cols(), ")^T"));
  Matrix<Real> v;
  v.noalias() = a.value() * b.value().transpose();
  Var<Real> out = a.graph->Make(std::move(v), a.requires_grad() || b.requires_grad());
  if (out.requires_grad()) {
    Node<Real> *an = a.node, *bn = b.node, *on = out.node;
    on->backward = [an, bn, on] {
      if (an->requires_grad) an->G().noalias() += on->G() * bn->V();
      if (bn->requires_grad) bn->G().noalias() += on->G().transpose() * an->V();
    };
  }
  return out;
}

template <typename Real>
Var<Real> Add(Var<Real> a, Var<Real> b) {
  internal::CheckSameShape(a, b, "Add");
  Var<Real> out = a.graph->Make(a.value() + b.value(), a.requires_grad() || b.requires_grad());
  if (out.requires_grad()) {
    Node<Real> *an = a.node, *bn = b.node, *on = out.node;
    on->backward = [an, bn, on] {
      if (an->requires_grad) an->G() += on->G();
      if (bn->requires_grad) bn->G() += on->G();
    };
  }
  return out;
}

/// x + s * y, the residual update.
template <typename Real>
Var<Real> AddScaled(Var<Real> x, Var<Real> y, Real s) {
  internal::CheckSameShape(x, y, "AddScaled");
  Var<Real> out = x.graph->Make(x.value() + s * y.value(), x.requires_grad() || y.requires_grad());
  if (out.requires_grad()) {
    Node<Real> *xn = x.node, *yn = y.node, *on = out.node;
    on->backward = [xn, yn, on, s] {
      if (xn->requires_grad) xn->G() += on->G();
      if (yn->requires_grad) yn->G() += s * on->G();
    };
  }
  return out;
}

/// Adds a 1 x n row to every row of x.
template <typename Real>
Var<Real> AddRow(Var<Real> x, Var<Real> row) {
  if (row.rows() != 1 || row.cols() != x.cols())
    throw InvalidInput(StrCat("AddRow: row is ", row.rows(), "x", row.cols(), ", x has ", x.cols(), " cols"));
  Matrix<Real> v = x.value();
  v.rowwise() += row.value().row(0);
  Var<Real> out = x.graph->Make(std::move(v), x.requires_grad() || row.requires_grad());
  if (out.requires_grad()) {
    Node<Real> *xn = x.node, *rn = row.node, *on = out.node;
    on->backward = [xn, rn, on] {
      if (xn->requires_grad) xn->G() += on->G();
      if (rn->requires_grad) rn->G() += on->G().colwise().sum();
    };
  }
  return out;
}

template <typename Real>
Var<Real> Scale(Var<Real> x, Real s) {
  Var<Real> out = x.graph->Make(s * x.value(), x.requires_grad());
  if (out.requires_grad()) {
    Node<Real> *xn = x.node, *on = out.node;
    on->backward = [xn, on, s] { xn->G() += s * on->G(); };
  }
  return out;
}

/// Elementwise product.
template <typename Real>
Var<Real> Mul(Var<Real> a, Var<Real> b) {
  internal::CheckSameShape(a, b, "Mul");
  Var<Real> out = a.graph->Make(a.value().cwiseProduct(b.value()), a.requires_grad() || b.requires_grad());
  if (out.requires_grad()) {
    Node<Real> *an = a.node, *bn = b.node, *on = out.node;
    on->backward = [an, bn, on] {
      if (an->requires_grad) an->G() += on->G().cwiseProduct(bn->V());
      if (bn->requires_grad) bn->G() += on->G().cwiseProduct(an->V());
    };
  }
  return out;
}

template <typename Real>
Var<Real> Sigmoid(Var<Real> x) {
  Matrix<Real> y = (Real(1) + (-x.value().array()).exp()).inverse().matrix();
  Var<Real> out = x.graph->Make(std::move(y), x.requires_grad());
  if (out.requires_grad()) {
    Node<Real> *xn = x.node, *on = out.node;
    on->backward = [xn, on] {
      const auto &y = on->V().array();
      xn->G().array() += on->G().array() * y * (Real(1) - y);
    };
  }
  return out;
}

/// x * sigmoid(x).
template <typename Real>
Var<Real> Swish(Var<Real> x) {
  Matrix<Real> sig = (Real(1) + (-x.value().array()).exp()).inverse().matrix();
  Var<Real> out = x.graph->Make(x.value().cwiseProduct(sig), x.requires_grad());
  if (out.requires_grad()) {
    Node<Real> *xn = x.node, *on = out.node;
    on->backward = [xn, on, sig = std::move(sig)] {
      const auto &x = xn->V().array();
      const auto &s = sig.array();
      xn->G().array() += on->G().array() * (s + x * s * (Real(1) - s));
    };
  }
  return out;
}

template <typename Real>
Var<Real> Relu(Var<Real> x) {
  Var<Real> out = x.graph->Make(x.value().cwiseMax(Real(0)), x.requires_grad());
  if (out.requires_grad()) {
    Node<Real> *xn = x.node, *on = out.node;
    on->backward = [xn, on] {
      xn->G().array() += (xn->V().array() > Real(0)).select(on->G().array(), Real(0));
    };
  }
  return out;
}

/// Row-wise layer normalization with affine (1 x n) gain and bias.
template <typename Real>
Var<Real> LayerNorm(Var<Real> x, Var<Real> gain, Var<Real> bias, Real eps = Real(1e-5)) {
  const Eigen::Index n = x.cols();
  const Matrix<Real> &xv = x.value();
  Matrix<Real> xhat(xv.rows(), n);
  Eigen::Matrix<Real, Eigen::Dynamic, 1> inv_std(xv.rows());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    Real mean = xv.row(r).mean();
    Real var = (xv.row(r).array() - mean).square().mean();
    inv_std[r] = Real(1) / std::sqrt(var + eps);
    xhat.row(r) = (xv.row(r).array() - mean) * inv_std[r];
  }
  Matrix<Real> y = (xhat.array().rowwise() * gain.value().row(0).array()).matrix();
  y.rowwise() += bias.value().row(0);
  bool rg = x.requires_grad() || gain.requires_grad() || bias.requires_grad();
  Var<Real> out = x.graph->Make(std::move(y), rg);
  if (out.requires_grad()) {
    Node<Real> *xn = x.node, *gn = gain.node, *bn = bias.node, *on = out.node;
    on->backward = [xn, gn, bn, on, xhat = std::move(xhat), inv_std = std::move(inv_std), n] {
      const Matrix<Real> &go = on->G();
      if (bn->requires_grad) bn->G() += go.colwise().sum();
      if (gn->requires_grad) gn->G() += go.cwiseProduct(xhat).colwise().sum();
      if (xn->requires_grad) {
        Matrix<Real> dxhat = (go.array().rowwise() * gn->V().row(0).array()).matrix();
        Matrix<Real> &gx = xn->G();
        for (Eigen::Index r = 0; r < go.rows(); ++r) {
          Real s1 = dxhat.row(r).sum();
          Real s2 = dxhat.row(r).dot(xhat.row(r));
          gx.row(r).array() += inv_std[r] / Real(n) *
                               (Real(n) * dxhat.row(r).array() - s1 - xhat.row(r).array() * s2);
        }
      }
    };
  }
  return out;
}

/// Row-wise softmax. With `causal`, entry (i, j) for j > i is excluded.
template <typename Real>
Var<Real> Softmax(Var<Real> x, bool causal = false) {
  Matrix<Real> y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    Eigen::Index width = causal ? std::min<Eigen::Index>(r + 1, x.cols()) : x.cols();
    auto in = x.value().row(r).head(width).array();
    Real mx = in.maxCoeff();
    y.row(r).head(width) = (in - mx).exp().matrix();
    y.row(r).head(width) /= y.row(r).head(width).sum();
    y.row(r).tail(x.cols() - width).setZero();
  }
  Var<Real> out = x.graph->Make(std::move(y), x.requires_grad());
  if (out.requires_grad()) {
    Node<Real> *xn = x.node, *on = out.node;
    on->backward = [xn, on] {
      const Matrix<Real> &y = on->V();
      const Matrix<Real> &go = on->G();
      Matrix<Real> &gx = xn->G();
      for (Eigen::Index r = 0; r < y.rows(); ++r) {
        Real dot = go.row(r).dot(y.row(r));
        gx.row(r).array() += y.row(r).array() * (go.row(r).array() - dot);
      }
    };
  }
  return out;
}

template <typename Real>
Var<Real> LogSoftmax(Var<Real> x) {
  Matrix<Real> y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    auto in = x.value().row(r).array();
    Real mx = in.maxCoeff();
    Real lse = mx + std::log((in - mx).exp().sum());
    y.row(r) = (in - lse).matrix();
  }
  Var<Real> out = x.graph->Make(std::move(y), x.requires_grad());
  if (out.requires_grad()) {
    Node<Real> *xn = x.node, *on = out.node;
    on->backward = [xn, on] {
      const Matrix<Real> &y = on->V();
      const Matrix<Real> &go = on->G();
      Matrix<Real> &gx = xn->G();
      for (Eigen::Index r = 0; r < y.rows(); ++r)
        gx.row(r).array() += go.row(r).array() - y.row(r).array().exp() * go.row(r).sum();
    };
  }
  return out;
}

/// Inverted dropout: kept entries are scaled by 1/(1-p).
template <typename Real>
Var<Real> Dropout(Var<Real> x, Real p, Rng &rng) {
  if (p <= Real(0)) return x;
  Matrix<Real> mask(x.rows(), x.cols());
  std::bernoulli_distribution keep(1.0 - static_cast<double>(p));
  const Real scale = Real(1) / (Real(1) - p);
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? scale : Real(0);
  Var<Real> out = x.graph->Make(x.value().cwiseProduct(mask), x.requires_grad());
  if (out.requires_grad()) {
    Node<Real> *xn = x.node, *on = out.node;
    on->backward = [xn, on, mask = std::move(mask)] { xn->G() += on->G().cwiseProduct(mask); };
  }
  return out;
}

template <typename Real>
Var<Real> SliceCols(Var<Real> x, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > x.cols()) throw InvalidInput("SliceCols out of range");
  Var<Real> out = x.graph->Make(x.value().middleCols(start, count), x.requires_grad());
  if (out.requires_grad()) {
    Node<Real> *xn = x.node, *on = out.node;
    on->backward = [xn, on, start, count] { xn->G().middleCols(start, count) += on->G(); };
  }
  return out;
}

template <typename Real>
Var<Real> ConcatCols(const std::vector<Var<Real>> &parts) {
  if (parts.empty()) throw InvalidInput("ConcatCols of nothing");
  Eigen::Index rows = parts[0].rows(), cols = 0;
  bool rg = false;
  for (const auto &p : parts) {
    if (p.rows() != rows) throw InvalidInput("ConcatCols: row mismatch");
    cols += p.cols();
    rg = rg || p.requires_grad();
  }
  Matrix<Real> v(rows, cols);
  Eigen::Index c = 0;
  for (const auto &p : parts) {
    v.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  Var<Real> out = parts[0].graph->Make(std::move(v), rg);
  if (out.requires_grad()) {
    std::vector<Node<Real> *> nodes;
    for (const auto &p : parts) nodes.push_back(p.node);
    Node<Real> *on = out.node;
    on->backward = [nodes = std::move(nodes), on] {
      Eigen::Index c = 0;
      for (Node<Real> *n : nodes) {
        Eigen::Index w = n->V().cols();
        if (n->requires_grad) n->G() += on->G().middleCols(c, w);
        c += w;
      }
    };
  }
  return out;
}

/// Relative-position gather. `full` is T x (2T-1) with column p holding the
/// score for relative distance (i - j) = T-1-p; the result is T x T with
/// out(i, j) = full(i, T-1-i+j).
template <typename Real>
Var<Real> RelShift(Var<Real> full) {
  const Eigen::Index t = full.rows();
  if (full.cols() != 2 * t - 1) throw InvalidInput("RelShift expects a T x (2T-1) input");
  Matrix<Real> v(t, t);
  for (Eigen::Index i = 0; i < t; ++i) v.row(i) = full.value().row(i).segment(t - 1 - i, t);
  Var<Real> out = full.graph->Make(std::move(v), full.requires_grad());
  if (out.requires_grad()) {
    Node<Real> *fn = full.node, *on = out.node;
    on->backward = [fn, on, t] {
      Matrix<Real> &g = fn->G();
      for (Eigen::Index i = 0; i < t; ++i) g.row(i).segment(t - 1 - i, t) += on->G().row(i);
    };
  }
  return out;
}

/// Unfolds a T x C sequence for a strided, unpadded convolution with the
/// given kernel: row t of the result is [x(s t), x(s t + 1), ...].
template <typename Real>
Var<Real> Im2Col(Var<Real> x, int kernel, int stride) {
  const Eigen::Index t_in = x.rows(), c = x.cols();
  if (t_in < kernel) throw InvalidInput(StrCat("Im2Col: ", t_in, " frames < kernel ", kernel));
  const Eigen::Index t_out = (t_in - kernel) / stride + 1;
  Matrix<Real> v(t_out, kernel * c);
  for (Eigen::Index t = 0; t < t_out; ++t)
    for (int k = 0; k < kernel; ++k) v.row(t).segment(k * c, c) = x.value().row(t * stride + k);
  Var<Real> out = x.graph->Make(std::move(v), x.requires_grad());
  if (out.requires_grad()) {
    Node<Real> *xn = x.node, *on = out.node;
    on->backward = [xn, on, t_out, kernel, stride, c] {
      Matrix<Real> &g = xn->G();
      for (Eigen::Index t = 0; t < t_out; ++t)
        for (int k = 0; k < kernel; ++k) g.row(t * stride + k) += on->G().row(t).segment(k * c, c);
    };
  }
  return out;
}

/// Depthwise 1-D convolution along time with "same" zero padding;
/// weight is kernel x C, bias 1 x C.
template <typename Real>
Var<Real> DepthwiseConv(Var<Real> x, Var<Real> weight, Var<Real> bias) {
  const Eigen::Index t_len = x.rows();
  const int kernel = static_cast<int>(weight.rows());
  const int pad = (kernel - 1) / 2;
  if (weight.cols() != x.cols() || bias.cols() != x.cols()) throw InvalidInput("DepthwiseConv: channel mismatch");
  Matrix<Real> y(t_len, x.cols());
  y.rowwise() = bias.value().row(0);
  // Output rows [lo, hi) read input rows shifted by (k - pad).
  auto range = [t_len, pad](int k, Eigen::Index *lo, Eigen::Index *hi) {
    *lo = std::max<Eigen::Index>(0, pad - k);
    *hi = std::min<Eigen::Index>(t_len, t_len + pad - k);
  };
  for (int k = 0; k < kernel; ++k) {
    Eigen::Index lo, hi;
    range(k, &lo, &hi);
    if (hi <= lo) continue;
    y.middleRows(lo, hi - lo).array() +=
        x.value().middleRows(lo + k - pad, hi - lo).array().rowwise() * weight.value().row(k).array();
  }
  bool rg = x.requires_grad() || weight.requires_grad() || bias.requires_grad();
  Var<Real> out = x.graph->Make(std::move(y), rg);
  if (out.requires_grad()) {
    Node<Real> *xn = x.node, *wn = weight.node, *bn = bias.node, *on = out.node;
    on->backward = [xn, wn, bn, on, kernel, pad, range] {
      const Matrix<Real> &go = on->G();
      if (bn->requires_grad) bn->G() += go.colwise().sum();
      for (int k = 0; k < kernel; ++k) {
        Eigen::Index lo, hi;
        range(k, &lo, &hi);
        if (hi <= lo) continue;
        auto g_rows = go.middleRows(lo, hi - lo).array();
        if (wn->requires_grad)
          wn->G().row(k) += (g_rows * xn->V().middleRows(lo + k - pad, hi - lo).array()).colwise().sum().matrix();
        if (xn->requires_grad)
          xn->G().middleRows(lo + k - pad, hi - lo).array() += g_rows.rowwise() * wn->V().row(k).array();
      }
    };
  }
  return out;
}

/// Rows of `table` selected by `ids` (embedding lookup).
template <typename Real>
Var<Real> GatherRows(Var<Real> table, std::span<const int> ids) {
  Matrix<Real> v(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.rows()) throw InvalidInput(StrCat("GatherRows: id ", ids[i], " out of range"));
    v.row(static_cast<Eigen::Index>(i)) = table.value().row(ids[i]);
  }
  Var<Real> out = table.graph->Make(std::move(v), table.requires_grad());
  if (out.requires_grad()) {
    Node<Real> *tn = table.node, *on = out.node;
    std::vector<int> idv(ids.begin(), ids.end());
    on->backward = [tn, on, idv = std::move(idv)] {
      for (size_t i = 0; i < idv.size(); ++i) tn->G().row(idv[i]) += on->G().row(static_cast<Eigen::Index>(i));
    };
  }
  return out;
}

/// Weighted sum of 1x1 nodes.
template <typename Real>
Var<Real> WeightedSum(const std::vector<Var<Real>> &scalars, const std::vector<Real> &weights) {
  if (scalars.empty() || scalars.size() != weights.size()) throw InvalidInput("WeightedSum: bad arguments");
  Real total = 0;
  bool rg = false;
  for (size_t i = 0; i < scalars.size(); ++i) {
    total += weights[i] * scalars[i].scalar();
    rg = rg || scalars[i].requires_grad();
  }
  Var<Real> out = scalars[0].graph->Make(Matrix<Real>::Constant(1, 1, total), rg);
  if (out.requires_grad()) {
    std::vector<Node<Real> *> nodes;
    for (const auto &s : scalars) nodes.push_back(s.node);
    Node<Real> *on = out.node;
    on->backward = [nodes = std::move(nodes), weights, on] {
      for (size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i]->requires_grad) nodes[i]->G()(0, 0) += weights[i] * on->G()(0, 0);
    };
  }
  return out;
}

/// A scalar node whose value and gradient w.r.t. `input` were computed
/// externally (used for the CTC and cross-entropy losses).
template <typename Real>
Var<Real> ExternalLoss(Var<Real> input, Real value, Matrix<Real> grad_wrt_input) {
  Var<Real> out = input.graph->Make(Matrix<Real>::Constant(1, 1, value), input.requires_grad());
  if (out.requires_grad()) {
    Node<Real> *in = input.node, *on = out.node;
    on->backward = [in, on, g = std::move(grad_wrt_input)] { in->G() += on->G()(0, 0) * g; };
  }
  return out;
}

}  // namespace ag
}  // namespace enctap

#endif  // ENCTAP_AUTOGRAD_OPS_H_
