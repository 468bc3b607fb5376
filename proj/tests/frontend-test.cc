// tests/frontend-test.cc

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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <set>
#include <tuple>
#include <vector>

#include "enctap/frontend/mel.h"
#include "enctap/frontend/pitch.h"
#include "enctap/frontend/specaug.h"
#include "enctap/frontend/wav-io.h"
#include "oracles.h"

namespace enctap {
namespace {

std::vector<int16_t> Tone(double hz, int samples, double amp = 8000.0) {
  std::vector<int16_t> w(samples);
  for (int i = 0; i < samples; ++i) w[i] = int16_t(std::lround(amp * std::sin(2 * std::numbers::pi * hz * i / 16000.0)));
  return w;
}

TEST(WavIo, RoundTrip) {
  std::vector<int16_t> w = Tone(300, 1234);
  w[5] = -32768;
  w[6] = 32767;
  EXPECT_EQ(ParseWav(EncodeWav(w)), w);
}

TEST(WavIo, RejectsOtherRatesAndMalformedFiles) {
  std::string bytes = EncodeWav(Tone(300, 100));
  std::string wrong_rate = bytes;
  uint32_t rate = 8000;
  std::memcpy(&wrong_rate[24], &rate, 4);
  EXPECT_THROW(ParseWav(wrong_rate), InvalidInput);
  std::string stereo = bytes;
  stereo[22] = 2;
  EXPECT_THROW(ParseWav(stereo), InvalidInput);
  EXPECT_THROW(ParseWav("RIFF....WAVX"), ParseError);
  EXPECT_THROW(ParseWav(bytes.substr(0, 30)), ParseError);
}

TEST(LogMel, FrameCountOfOneSecond) {
  AcousticFeatures f = ComputeLogMel(std::vector<int16_t>(16000, 1));
  // 1 + floor((16000 - 400) / 160)
  EXPECT_EQ(f.Frames(), 98);
  EXPECT_EQ(f.Dims(), 80);
  EXPECT_DOUBLE_EQ(f.frame_shift, 0.010);
  EXPECT_DOUBLE_EQ(f.frame_length, 0.025);
}

TEST(LogMel, FrameCountFormulaForRandomLengths) {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> len(400, 6000);
  for (int trial = 0; trial < 200; ++trial) {
    int n = len(rng);
    int expected = 1 + (n - 400) / 160;
    EXPECT_EQ(NumFrames(n), expected) << n;
    if (trial < 20) {
      EXPECT_EQ(ComputeLogMel(std::vector<int16_t>(n, 3)).Frames(), expected) << n;
    }
  }
}

TEST(LogMel, SilenceMapsToLogFloor) {
  AcousticFeatures f = ComputeLogMel(std::vector<int16_t>(4000, 0));
  const float floor_value = static_cast<float>(std::log(kLogFloor));
  for (Eigen::Index i = 0; i < f.values.size(); ++i) ASSERT_EQ(f.values.data()[i], floor_value);
}

TEST(LogMel, RejectsShortInput) {
  EXPECT_THROW(ComputeLogMel(std::vector<int16_t>(399, 1)), InvalidInput);
  MelOptions opts;
  opts.n_mels = 0;
  EXPECT_THROW(ComputeLogMel(std::vector<int16_t>(800, 1), opts), InvalidInput);
}

TEST(LogMel, AllFiniteOnNoise) {
  std::mt19937 rng(1);
  std::normal_distribution<double> n(0, 3000);
  std::vector<int16_t> w(8000);
  for (auto &s : w) s = int16_t(std::clamp(n(rng), -32000.0, 32000.0));
  EXPECT_TRUE(AllFinite(ComputeLogMel(w).values));
}

// The strongest DFT bin of a 440 Hz tone, found by a naive DFT, must fall
// into the mel band whose centre is nearest to it.
TEST(LogMel, ToneLandsInTheExpectedBand) {
  const int n = 16000;
  std::vector<int16_t> w = Tone(440, n);
  AcousticFeatures f = ComputeLogMel(w);

  // naive DFT of the first frame (rectangular window, 512 points)
  int best_bin = 0;
  double best_power = -1;
  for (int k = 0; k <= 256; ++k) {
    std::complex<double> acc = 0;
    for (int i = 0; i < 400; ++i) acc += double(w[i]) * std::polar(1.0, -2 * std::numbers::pi * k * i / 512.0);
    if (std::norm(acc) > best_power) best_power = std::norm(acc), best_bin = k;
  }
  const double peak_hz = best_bin * 16000.0 / 512.0;
  auto mel = [](double hz) { return 1127.0 * std::log(1 + hz / 700.0); };
  const double lo = mel(20), hi = mel(8000);
  int expected = 0;
  double best_dist = 1e9;
  for (int m = 0; m < 80; ++m) {
    double centre = lo + (hi - lo) * (m + 1) / 81.0;
    if (std::abs(centre - mel(peak_hz)) < best_dist) best_dist = std::abs(centre - mel(peak_hz)), expected = m;
  }
  int agree = 0, interior = 0;
  for (int t = 2; t < f.Frames() - 2; ++t, ++interior) {
    Eigen::Index arg;
    f.values.row(t).maxCoeff(&arg);
    agree += arg == expected;
  }
  EXPECT_GE(agree, 0.95 * interior) << "expected band " << expected;
}

TEST(Pitch, SilenceIsUnvoiced) {
  MatrixF p = ComputePitch(std::vector<int16_t>(4000, 0));
  EXPECT_EQ(p.rows(), NumFrames(4000));
  EXPECT_EQ(p.cols(), 3);
  for (int t = 0; t < p.rows(); ++t) EXPECT_EQ(p(t, 1), 0.0f);
}

TEST(Pitch, PulseTrainAt100Hz) {
  std::vector<int16_t> w(16000, 0);
  for (size_t i = 0; i < w.size(); i += 160) w[i] = 20000;
  MatrixF p = ComputePitch(w);
  ASSERT_EQ(p.rows(), ComputeLogMel(w).Frames());
  std::vector<float> voiced;
  for (int t = 0; t < p.rows(); ++t) {
    ASSERT_GE(p(t, 1), 0.0f);
    ASSERT_LE(p(t, 1), 1.0f);
    if (p(t, 1) > 0.5f) voiced.push_back(p(t, 0));
  }
  ASSERT_GT(voiced.size(), p.rows() / 2u);
  std::nth_element(voiced.begin(), voiced.begin() + voiced.size() / 2, voiced.end());
  EXPECT_NEAR(voiced[voiced.size() / 2], 100.0, 5.0);
}

TEST(Pitch, AppendsThreeColumns) {
  std::vector<int16_t> w = Tone(150, 6000);
  AcousticFeatures f = AppendPitch(ComputeLogMel(w), ComputePitch(w));
  EXPECT_EQ(f.Dims(), 83);
  EXPECT_TRUE(AllFinite(f.values));
}

using oracle::NoMaskValueMatrix;
using oracle::ReplayMaskedCells;

TEST(SpecAug, ZeroWidthIsIdentity) {
  MatrixF x = NoMaskValueMatrix(37, 11, 1);
  for (uint64_t seed = 0; seed < 20; ++seed) EXPECT_EQ(ApplySpecAug(x, SpecAugPolicy{0, 0, 2, 2, 0.0f}, seed), x);
}

TEST(SpecAug, RejectsEmptyInputAndNegativeWidths) {
  EXPECT_THROW(ApplySpecAug(MatrixF(0, 0), SpecAugPolicy{1, 1}, 1), InvalidInput);
  EXPECT_THROW(ApplySpecAug(MatrixF(MatrixF::Ones(3, 3)), SpecAugPolicy{-1, 1}, 1), InvalidInput);
}

class SpecAugReplay : public ::testing::TestWithParam<std::tuple<int, int>> {};

TEST_P(SpecAugReplay, MaskedCellsMatchReplayedRectangles) {
  auto [F, T] = GetParam();
  for (uint64_t seed = 0; seed < 50; ++seed) {
    MatrixF x = NoMaskValueMatrix(100, 80, seed);
    MatrixF y = ApplySpecAug(x, SpecAugPolicy{F, T, 2, 2, 0.0f}, seed);
    auto expected = ReplayMaskedCells(100, 80, F, T, 2, 2, seed);
    std::set<std::pair<int, int>> masked;
    for (int r = 0; r < 100; ++r)
      for (int c = 0; c < 80; ++c) {
        if (y(r, c) == 0.0f) masked.insert({r, c});
        else ASSERT_EQ(y(r, c), x(r, c));  // unmasked cells bit-identical
      }
    ASSERT_EQ(masked, expected) << "seed " << seed;
  }
}

INSTANTIATE_TEST_SUITE_P(Widths, SpecAugReplay,
                         ::testing::Values(std::make_tuple(20, 10), std::make_tuple(20, 20), std::make_tuple(3, 1),
                                           std::make_tuple(200, 500)));  // last one exercises clamping

TEST(SpecAug, SeededDeterminismAndSeedSensitivity) {
  MatrixF x = NoMaskValueMatrix(100, 80, 3);
  SpecAugPolicy p{20, 10, 2, 2, 0.0f};
  EXPECT_EQ(ApplySpecAug(x, p, 42), ApplySpecAug(x, p, 42));
  int differ = 0;
  for (uint64_t t = 0; t < 100; ++t) {
    auto a = SampleMaskBands(100, 80, p, 1000 + 2 * t), b = SampleMaskBands(100, 80, p, 1001 + 2 * t);
    bool same = true;
    for (size_t i = 0; i < a.size(); ++i) same = same && a[i].start == b[i].start && a[i].width == b[i].width;
    differ += !same;
  }
  EXPECT_GE(differ, 99);
}

TEST(SpecAug, CustomFillValue) {
  MatrixF x = MatrixF::Ones(30, 20);
  SpecAugPolicy p{5, 5, 2, 2, -3.5f};
  MatrixF y = ApplySpecAug(x, p, 9);
  for (Eigen::Index i = 0; i < y.size(); ++i) EXPECT_TRUE(y.data()[i] == 1.0f || y.data()[i] == -3.5f);
}

}  // namespace
}  // namespace enctap
