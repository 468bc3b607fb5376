// enctap/experiments/optimizer.h

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

#ifndef ENCTAP_EXPERIMENTS_OPTIMIZER_H_
#define ENCTAP_EXPERIMENTS_OPTIMIZER_H_

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "enctap/autograd/graph.h"
#include "enctap/base/random.h"
#include "enctap/experiments/config.h"
#include "enctap/nnet/checkpoint.h"

namespace enctap {

/// Inverse-square-root schedule with linear warmup; `step` counts from 1.
inline double NoamLearningRate(const OptimizerConfig &c, int step) {
  const double s = std::max(step, 1), w = c.warmup_steps;
  return c.peak_lr * std::min(s / w, std::sqrt(w / s));
}

/// Adam over the trainable parameters with global-norm gradient clipping.
class Adam {
 public:
  explicit Adam(const OptimizerConfig &config) : config_(config) {}

  /// Applies update number `step` (from 1). Returns the pre-clip norm.
  double Step(ParameterSet<float> &params, int step) {
    double sq = 0.0;
    for (const auto &p : params.All())
      if (p->trainable && p->grad.size()) sq += p->grad.template cast<double>().squaredNorm();
    const double norm = std::sqrt(sq);
    const float scale = (config_.clip_norm > 0 && norm > config_.clip_norm) ? float(config_.clip_norm / norm) : 1.0f;
    const float lr = static_cast<float>(NoamLearningRate(config_, step));
    const float b1 = float(config_.adam_beta1), b2 = float(config_.adam_beta2), eps = float(config_.adam_eps);
    const float c1 = 1.0f - std::pow(b1, float(step)), c2 = 1.0f - std::pow(b2, float(step));
    for (const auto &p : params.All()) {
      if (!p->trainable || p->grad.size() == 0) continue;
      auto &[m, v] = state_[p->name];
      if (m.size() == 0) {
        m = MatrixF::Zero(p->value.rows(), p->value.cols());
        v = m;
      }
      auto g = (p->grad.array() * scale);
      m.array() = b1 * m.array() + (1.0f - b1) * g;
      v.array() = b2 * v.array() + (1.0f - b2) * g.square();
      p->value.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    }
    return norm;
  }

  void Save(NamedArrays *out) const {
    for (const auto &[name, mv] : state_) {
      out->emplace_back("adam.m:" + name, mv.first);
      out->emplace_back("adam.v:" + name, mv.second);
    }
  }

  void Load(const NamedArrays &arrays) {
    state_.clear();
    for (const auto &[key, m] : arrays) {
      if (key.rfind("adam.m:", 0) == 0) state_[key.substr(7)].first = m;
      else if (key.rfind("adam.v:", 0) == 0) state_[key.substr(7)].second = m;
    }
  }

 private:
  OptimizerConfig config_;
  std::map<std::string, std::pair<MatrixF, MatrixF>> state_;
};

/// Length-bucketed batches: examples sorted by length are cut into fixed
/// batches once; each epoch visits the batches in an order shuffled by
/// (seed, epoch). The batch for any step is a pure function of
/// (lengths, batch_size, seed, step), which makes resumption exact.
class BatchSchedule {
 public:
  BatchSchedule(const std::vector<int> &lengths, int batch_size, uint64_t seed) : seed_(seed) {
    if (lengths.empty()) throw InvalidInput("no training examples");
    std::vector<int> order(lengths.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return lengths[a] < lengths[b]; });
    for (size_t i = 0; i < order.size(); i += batch_size)
      batches_.emplace_back(order.begin() + i, order.begin() + std::min(order.size(), i + batch_size));
  }

  /// Example indices of step `step` (0-based).
  const std::vector<int> &Batch(int step) const {
    const int n = NumBatches(), epoch = step / n;
    if (epoch != cached_epoch_) {
      perm_.resize(n);
      std::iota(perm_.begin(), perm_.end(), 0);
      Rng rng(DeriveSeed(seed_, {static_cast<uint64_t>(epoch), 0xBA7C}));
      // Fisher-Yates with explicit draws, independent of the std::shuffle
      // implementation.
      for (int i = n - 1; i > 0; --i) std::swap(perm_[i], perm_[rng() % (i + 1)]);
      cached_epoch_ = epoch;
    }
    return batches_[perm_[step % n]];
  }

  int NumBatches() const { return static_cast<int>(batches_.size()); }

 private:
  uint64_t seed_;
  std::vector<std::vector<int>> batches_;
  mutable std::vector<int> perm_;
  mutable int cached_epoch_ = -1;
};

}  // namespace enctap

#endif  // ENCTAP_EXPERIMENTS_OPTIMIZER_H_
