// enctap/autograd/graph.h

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

// Tape-based reverse-mode differentiation over dense matrices.
//
// A Graph records every operation as a Node in creation order; Backward()
// walks the nodes in reverse. Parameters live outside the graph and are
// bound as leaves, so their gradients accumulate directly into
// Parameter::grad. A leaf whose parameter is not trainable never requires a
// gradient, and nothing downstream of it is ever asked to propagate one
// into it.

#ifndef ENCTAP_AUTOGRAD_GRAPH_H_
#define ENCTAP_AUTOGRAD_GRAPH_H_

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "enctap/base/error.h"
#include "enctap/base/matrix.h"

namespace enctap {

template <typename Real>
struct Parameter {
  std::string name;
  Matrix<Real> value;
  Matrix<Real> grad;
  bool trainable = true;

  void ZeroGrad() { grad.setZero(value.rows(), value.cols()); }
};

/// Owns the parameters of a model in registration order. Names are
/// module-scoped ("encoder.layer03.conv.depthwise.weight").
template <typename Real>
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet &) = delete;
  ParameterSet &operator=(const ParameterSet &) = delete;

  Parameter<Real> *Add(const std::string &name, int rows, int cols) {
    if (index_.count(name)) throw InvalidInput(StrCat("duplicate parameter name ", name));
    auto p = std::make_unique<Parameter<Real>>();
    p->name = name;
    p->value = Matrix<Real>::Zero(rows, cols);
    p->grad = Matrix<Real>::Zero(rows, cols);
    index_[name] = p.get();
    params_.push_back(std::move(p));
    return params_.back().get();
  }

  Parameter<Real> *Find(const std::string &name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : it->second;
  }

  const std::vector<std::unique_ptr<Parameter<Real>>> &All() const { return params_; }
  size_t Size() const { return params_.size(); }

  int64_t NumScalars() const {
    int64_t n = 0;
    for (const auto &p : params_) n += p->value.size();
    return n;
  }

  void ZeroGrad() {
    for (auto &p : params_) p->ZeroGrad();
  }

 private:
  std::vector<std::unique_ptr<Parameter<Real>>> params_;
  std::unordered_map<std::string, Parameter<Real> *> index_;
};

struct ManifestEntry {
  std::string name;
  int rows;
  int cols;
  bool trainable;
};

/// Ordered (name, shape, trainable) listing of a parameter set.
template <typename Real>
std::vector<ManifestEntry> Manifest(const ParameterSet<Real> &params) {
  std::vector<ManifestEntry> out;
  for (const auto &p : params.All())
    out.push_back({p->name, static_cast<int>(p->value.rows()), static_cast<int>(p->value.cols()), p->trainable});
  return out;
}

template <typename Real>
uint64_t Checksum(const ParameterSet<Real> &params, const std::string &prefix = "") {
  uint64_t h = 1469598103934665603ull;
  for (const auto &p : params.All()) {
    if (p->name.compare(0, prefix.size(), prefix) != 0) continue;
    h = Fnv1a(p->name.data(), p->name.size(), h);
    h = Checksum(p->value, h);
  }
  return h;
}

template <typename Real>
struct Node {
  Matrix<Real> value;
  Matrix<Real> grad;
  Parameter<Real> *param = nullptr;
  bool requires_grad = false;
  std::function<void()> backward;

  const Matrix<Real> &V() const { return param ? param->value : value; }
  bool HasGrad() const { return (param ? param->grad : grad).size() != 0; }
  Matrix<Real> &G() {
    Matrix<Real> &g = param ? param->grad : grad;
    if (g.size() == 0) g.setZero(V().rows(), V().cols());
    return g;
  }
};

template <typename Real>
class Graph;

/// Handle to a node of a Graph. Cheap to copy.
template <typename Real>
struct Var {
  Node<Real> *node = nullptr;
  Graph<Real> *graph = nullptr;

  const Matrix<Real> &value() const { return node->V(); }
  const Matrix<Real> &grad() const { return node->G(); }
  bool requires_grad() const { return node->requires_grad; }
  Eigen::Index rows() const { return node->V().rows(); }
  Eigen::Index cols() const { return node->V().cols(); }
  Real scalar() const { return node->V()(0, 0); }
};

template <typename Real>
class Graph {
 public:
  /// With grad_enabled false no node ever requires a gradient (inference).
  explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Graph(const Graph &) = delete;
  Graph &operator=(const Graph &) = delete;

  bool grad_enabled() const { return grad_enabled_; }

  Var<Real> Constant(Matrix<Real> value) { return Make(std::move(value), false); }

  /// Leaf input; `requires_grad` allows differentiating w.r.t. inputs.
  Var<Real> Input(Matrix<Real> value, bool requires_grad = false) { return Make(std::move(value), requires_grad); }

  Var<Real> Param(Parameter<Real> &p) {
    auto it = param_nodes_.find(&p);
    if (it != param_nodes_.end()) return {it->second, this};
    nodes_.emplace_back();
    Node<Real> *n = &nodes_.back();
    n->param = &p;
    n->requires_grad = grad_enabled_ && p.trainable;
    param_nodes_[&p] = n;
    return {n, this};
  }

  Var<Real> Make(Matrix<Real> value, bool requires_grad) {
    nodes_.emplace_back();
    Node<Real> *n = &nodes_.back();
    n->value = std::move(value);
    n->requires_grad = grad_enabled_ && requires_grad;
    return {n, this};
  }

  /// Back-propagates d(root)/d(.) where root is a 1x1 node.
  void Backward(Var<Real> root) {
    if (root.rows() != 1 || root.cols() != 1) throw InvalidInput("Backward() needs a scalar root");
    if (!root.requires_grad()) return;
    root.node->G().setConstant(Real(1));
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      Node<Real> &n = *it;
      if (n.requires_grad && n.backward && n.HasGrad()) n.backward();
    }
  }

  size_t NumNodes() const { return nodes_.size(); }

 private:
  bool grad_enabled_;
  std::deque<Node<Real>> nodes_;
  std::unordered_map<Parameter<Real> *, Node<Real> *> param_nodes_;
};

}  // namespace enctap

#endif  // ENCTAP_AUTOGRAD_GRAPH_H_
