// enctap/frontend/pitch.h

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

#ifndef ENCTAP_FRONTEND_PITCH_H_
#define ENCTAP_FRONTEND_PITCH_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "enctap/base/error.h"
#include "enctap/base/matrix.h"
#include "enctap/frontend/mel.h"

namespace enctap {

struct PitchOptions {
  double min_f0 = 60.0;
  double max_f0 = 400.0;
  // Lags whose correlation is within this fraction of the best are
  // considered, and the shortest one wins (suppresses octave-down errors).
  double octave_tolerance = 0.9;
};

/// Three pitch features per frame: f0 estimate in Hz, voicing score in
/// [0, 1], and delta f0. Uses the same framing as ComputeLogMel, so frame
/// counts always match.
///
/// The estimator is plain normalized autocorrelation with parabolic peak
/// interpolation. It is much simpler than toolkit pitch trackers (no
/// Viterbi smoothing, no resampling).
inline MatrixF ComputePitch(std::span<const int16_t> wave, const PitchOptions &opts = {}) {
  if (wave.size() < static_cast<size_t>(kWindowSamples))
    throw InvalidInput(StrCat("waveform has ", wave.size(), " samples; at least one window (",
                              kWindowSamples, ") is required"));
  const int frames = NumFrames(wave.size());
  const int min_lag = static_cast<int>(std::floor(kSampleRate / opts.max_f0));
  const int max_lag = std::min(kWindowSamples - 2, static_cast<int>(std::ceil(kSampleRate / opts.min_f0)));

  MatrixF out = MatrixF::Zero(frames, 3);
  std::vector<double> x(kWindowSamples), corr(max_lag + 2, 0.0);
  for (int t = 0; t < frames; ++t) {
    const int16_t *src = wave.data() + static_cast<size_t>(t) * kHopSamples;
    double mean = 0.0;
    for (int i = 0; i < kWindowSamples; ++i) mean += src[i];
    mean /= kWindowSamples;
    double energy = 0.0;
    for (int i = 0; i < kWindowSamples; ++i) {
      x[i] = src[i] - mean;
      energy += x[i] * x[i];
    }
    if (energy <= 0.0) continue;  // silence: f0 0, voicing 0

    double best = -1.0;
    for (int lag = min_lag - 1; lag <= max_lag + 1; ++lag) {
      double xy = 0.0, xx = 0.0, yy = 0.0;
      for (int i = 0; i + lag < kWindowSamples; ++i) {
        xy += x[i] * x[i + lag];
        xx += x[i] * x[i];
        yy += x[i + lag] * x[i + lag];
      }
      double denom = std::sqrt(xx * yy);
      corr[lag] = denom > 0.0 ? xy / denom : 0.0;
      if (lag >= min_lag && lag <= max_lag) best = std::max(best, corr[lag]);
    }
    int chosen = -1;
    for (int lag = min_lag; lag <= max_lag; ++lag) {
      bool local_peak = corr[lag] >= corr[lag - 1] && corr[lag] >= corr[lag + 1];
      if (local_peak && corr[lag] >= opts.octave_tolerance * best) {
        chosen = lag;
        break;
      }
    }
    if (chosen < 0 || best <= 0.0) continue;

    double a = corr[chosen - 1], b = corr[chosen], c = corr[chosen + 1];
    double denom = a - 2.0 * b + c;
    double offset = denom != 0.0 ? 0.5 * (a - c) / denom : 0.0;
    offset = std::clamp(offset, -0.5, 0.5);
    out(t, 0) = static_cast<float>(kSampleRate / (chosen + offset));
    out(t, 1) = static_cast<float>(std::clamp(b, 0.0, 1.0));
  }
  for (int t = 0; t < frames; ++t) {
    int prev = std::max(0, t - 1), next = std::min(frames - 1, t + 1);
    out(t, 2) = next == prev ? 0.0f : (out(next, 0) - out(prev, 0)) / float(next - prev);
  }
  return out;
}

/// Appends pitch columns to mel features (80 + 3 = 83 dims at the
/// default mel size).
inline AcousticFeatures AppendPitch(const AcousticFeatures &mel, const MatrixF &pitch) {
  if (pitch.rows() != mel.values.rows())
    throw InvalidInput(StrCat("pitch has ", pitch.rows(), " frames but mel has ", mel.values.rows()));
  AcousticFeatures out = mel;
  out.values.resize(mel.values.rows(), mel.values.cols() + pitch.cols());
  out.values << mel.values, pitch;
  return out;
}

}  // namespace enctap

#endif  // ENCTAP_FRONTEND_PITCH_H_
