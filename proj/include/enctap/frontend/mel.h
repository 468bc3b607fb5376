// enctap/frontend/mel.h

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

#ifndef ENCTAP_FRONTEND_MEL_H_
#define ENCTAP_FRONTEND_MEL_H_

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "enctap/base/error.h"
#include "enctap/base/matrix.h"
#include "enctap/frontend/wav-io.h"

namespace enctap {

inline constexpr int kWindowSamples = 400;  // 25 ms at 16 kHz
inline constexpr int kHopSamples = 160;     // 10 ms at 16 kHz
inline constexpr int kFftSize = 512;
inline constexpr double kLogFloor = 1e-10;

/// Frame-major features for one utterance.
struct AcousticFeatures {
  MatrixF values;  // frames x dims
  double frame_shift = 0.010;
  double frame_length = 0.025;

  int Frames() const { return static_cast<int>(values.rows()); }
  int Dims() const { return static_cast<int>(values.cols()); }
};

inline int NumFrames(size_t num_samples) {
  if (num_samples < static_cast<size_t>(kWindowSamples)) return 0;
  return 1 + static_cast<int>((num_samples - kWindowSamples) / kHopSamples);
}

inline double HzToMel(double hz) { return 1127.0 * std::log(1.0 + hz / 700.0); }
inline double MelToHz(double mel) { return 700.0 * (std::exp(mel / 1127.0) - 1.0); }

struct MelOptions {
  int n_mels = 80;
  double low_freq = 20.0;
  double high_freq = kSampleRate / 2.0;
  double preemph = 0.97;
  bool remove_dc = true;
};

/// Triangular filters on the HTK mel scale, n_mels x (kFftSize/2 + 1).
inline MatrixD MelFilterbank(const MelOptions &opts) {
  const int num_bins = kFftSize / 2 + 1;
  MatrixD bank = MatrixD::Zero(opts.n_mels, num_bins);
  double mel_lo = HzToMel(opts.low_freq), mel_hi = HzToMel(opts.high_freq);
  double delta = (mel_hi - mel_lo) / (opts.n_mels + 1);
  for (int m = 0; m < opts.n_mels; ++m) {
    double left = mel_lo + m * delta, center = left + delta, right = center + delta;
    for (int k = 0; k < num_bins; ++k) {
      double mel = HzToMel(k * double(kSampleRate) / kFftSize);
      if (mel > left && mel < right)
        bank(m, k) = mel <= center ? (mel - left) / (center - left) : (right - mel) / (right - center);
    }
  }
  return bank;
}

namespace internal {

/// Hann window raised to 0.85 (the "povey" window).
inline const std::vector<double> &AnalysisWindow() {
  static const std::vector<double> window = [] {
    std::vector<double> w(kWindowSamples);
    for (int i = 0; i < kWindowSamples; ++i)
      w[i] = std::pow(0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (kWindowSamples - 1)), 0.85);
    return w;
  }();
  return window;
}

/// Extracts frame `t`, removes DC, applies pre-emphasis and the window.
inline void PrepareFrame(std::span<const int16_t> wave, int t, const MelOptions &opts,
                         std::vector<double> *frame) {
  frame->assign(kFftSize, 0.0);
  const int16_t *src = wave.data() + static_cast<size_t>(t) * kHopSamples;
  double mean = 0.0;
  for (int i = 0; i < kWindowSamples; ++i) {
    (*frame)[i] = src[i];
    mean += src[i];
  }
  mean /= kWindowSamples;
  if (opts.remove_dc)
    for (int i = 0; i < kWindowSamples; ++i) (*frame)[i] -= mean;
  for (int i = kWindowSamples - 1; i > 0; --i) (*frame)[i] -= opts.preemph * (*frame)[i - 1];
  (*frame)[0] -= opts.preemph * (*frame)[0];
  const auto &win = AnalysisWindow();
  for (int i = 0; i < kWindowSamples; ++i) (*frame)[i] *= win[i];
}

}  // namespace internal

/// Log mel filterbank energies. Deterministic; zero-energy bins map to
/// log(kLogFloor).
inline AcousticFeatures ComputeLogMel(std::span<const int16_t> wave, const MelOptions &opts = {}) {
  if (opts.n_mels < 1) throw InvalidInput("n_mels must be >= 1");
  if (wave.size() < static_cast<size_t>(kWindowSamples))
    throw InvalidInput(StrCat("waveform has ", wave.size(), " samples; at least one window (",
                              kWindowSamples, ") is required"));
  const int frames = NumFrames(wave.size());
  const MatrixD bank = MelFilterbank(opts);
  const int num_bins = kFftSize / 2 + 1;

  Eigen::FFT<double> fft;
  std::vector<double> frame;
  std::vector<std::complex<double>> spectrum;
  Eigen::VectorXd power(num_bins);

  AcousticFeatures feats;
  feats.values.resize(frames, opts.n_mels);
  for (int t = 0; t < frames; ++t) {
    internal::PrepareFrame(wave, t, opts, &frame);
    fft.fwd(spectrum, frame);
    for (int k = 0; k < num_bins; ++k) power[k] = std::norm(spectrum[k]);
    Eigen::VectorXd energies = bank * power;
    for (int m = 0; m < opts.n_mels; ++m)
      feats.values(t, m) = static_cast<float>(std::log(energies[m] + kLogFloor));
  }
  return feats;
}

/// Subtracts the per-utterance mean of every feature dimension.
inline void MeanNormalize(AcousticFeatures *feats) {
  if (feats->Frames() == 0) return;
  RowVector<float> mean = feats->values.colwise().mean();
  feats->values.rowwise() -= mean;
}

}  // namespace enctap

#endif  // ENCTAP_FRONTEND_MEL_H_
