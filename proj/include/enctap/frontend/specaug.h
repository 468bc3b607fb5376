// enctap/frontend/specaug.h

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

#ifndef ENCTAP_FRONTEND_SPECAUG_H_
#define ENCTAP_FRONTEND_SPECAUG_H_

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "enctap/base/error.h"
#include "enctap/base/matrix.h"
#include "enctap/base/random.h"

namespace enctap {

/// Frequency/time masking parameters. The same policy type drives both
/// masking of input filterbanks and masking of tapped encoder embeddings,
/// where the "frequency" axis is the embedding dimension.
struct SpecAugPolicy {
  int freq_mask_width = 0;  // F: maximum band width along the dim axis
  int time_mask_width = 0;  // T: maximum band width along the frame axis
  int num_freq_masks = 2;
  int num_time_masks = 2;
  float mask_value = 0.0f;

  bool IsIdentity() const {
    return (freq_mask_width == 0 || num_freq_masks == 0) && (time_mask_width == 0 || num_time_masks == 0);
  }
  void Validate() const {
    if (freq_mask_width < 0 || time_mask_width < 0 || num_freq_masks < 0 || num_time_masks < 0)
      throw InvalidInput("SpecAug widths and counts must be non-negative");
  }
};

/// One masked band. `axis` 0 masks columns [start, start+width) of every
/// row; axis 1 masks rows [start, start+width).
struct MaskBand {
  enum Axis { kFreq = 0, kTime = 1 };
  Axis axis;
  int start;
  int width;
};

/// Draws the mask bands for a frames x dims matrix. Frequency masks are
/// drawn first, then time masks; each draws width ~ U{0..W} with W clamped
/// to the axis length, then start ~ U{0..len-width}.
inline std::vector<MaskBand> SampleMaskBands(int frames, int dims, const SpecAugPolicy &policy, uint64_t seed) {
  policy.Validate();
  Rng rng(seed);
  std::vector<MaskBand> bands;
  auto draw = [&](MaskBand::Axis axis, int count, int max_width, int len) {
    max_width = std::min(max_width, len);
    for (int i = 0; i < count; ++i) {
      int width = std::uniform_int_distribution<int>(0, max_width)(rng);
      int start = std::uniform_int_distribution<int>(0, len - width)(rng);
      bands.push_back({axis, start, width});
    }
  };
  draw(MaskBand::kFreq, policy.num_freq_masks, policy.freq_mask_width, dims);
  draw(MaskBand::kTime, policy.num_time_masks, policy.time_mask_width, frames);
  return bands;
}

/// Returns a masked copy of `features`. Cells outside every band are
/// bit-identical to the input.
template <typename Real>
Matrix<Real> ApplySpecAug(const Matrix<Real> &features, const SpecAugPolicy &policy, uint64_t seed) {
  if (features.size() == 0) throw InvalidInput("SpecAug input matrix is empty");
  Matrix<Real> out = features;
  if (policy.IsIdentity()) return out;
  const int frames = static_cast<int>(features.rows()), dims = static_cast<int>(features.cols());
  const Real fill = static_cast<Real>(policy.mask_value);
  for (const MaskBand &band : SampleMaskBands(frames, dims, policy, seed)) {
    if (band.width == 0) continue;
    if (band.axis == MaskBand::kFreq)
      out.middleCols(band.start, band.width).setConstant(fill);
    else
      out.middleRows(band.start, band.width).setConstant(fill);
  }
  return out;
}

}  // namespace enctap

#endif  // ENCTAP_FRONTEND_SPECAUG_H_
