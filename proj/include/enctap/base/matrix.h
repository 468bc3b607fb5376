// enctap/base/matrix.h

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

#ifndef ENCTAP_BASE_MATRIX_H_
#define ENCTAP_BASE_MATRIX_H_

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

namespace enctap {

/// Frame-major dense matrix: row = frame (or token), column = feature.
template <typename Real>
using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Real>
using RowVector = Eigen::Matrix<Real, 1, Eigen::Dynamic>;

using MatrixF = Matrix<float>;
using MatrixD = Matrix<double>;

template <typename Real>
bool AllFinite(const Matrix<Real> &m) {
  return m.allFinite();
}

/// log(exp(a) + exp(b)) without overflow; -inf is the additive identity.
template <typename Real>
Real LogAdd(Real a, Real b) {
  constexpr Real kNegInf = -std::numeric_limits<Real>::infinity();
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

/// FNV-1a over the raw bytes of a matrix. Bit-level equality is what the
/// freeze and copy contracts are stated in, so no tolerance is involved.
inline uint64_t Fnv1a(const void *data, size_t bytes, uint64_t h = 1469598103934665603ull) {
  const auto *p = static_cast<const unsigned char *>(data);
  for (size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

template <typename Real>
uint64_t Checksum(const Matrix<Real> &m, uint64_t h = 1469598103934665603ull) {
  int64_t shape[2] = {m.rows(), m.cols()};
  h = Fnv1a(shape, sizeof(shape), h);
  return Fnv1a(m.data(), sizeof(Real) * static_cast<size_t>(m.size()), h);
}

}  // namespace enctap

#endif  // ENCTAP_BASE_MATRIX_H_
