// enctap/data/synth.h

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

// Seeded synthetic speech-like corpora. Every token is a two-tone chord;
// a domain is a token inventory, a bigram "language model", a channel
// (bandpass) and a noise level. Two fixture domains stand in for a large
// clean source corpus and a small band-limited noisy target corpus.

#ifndef ENCTAP_DATA_SYNTH_H_
#define ENCTAP_DATA_SYNTH_H_

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "enctap/base/error.h"
#include "enctap/base/matrix.h"
#include "enctap/base/random.h"
#include "enctap/data/manifest.h"
#include "enctap/frontend/wav-io.h"

namespace enctap {

inline constexpr int kTokenSamples = 1920;  // 120 ms at 16 kHz
inline constexpr int kRampSamples = 160;    // 10 ms raised-cosine on/off ramps

/// All symbols a synthetic domain may use, in chord-table order.
inline const std::string &SynthAlphabet() {
  static const std::string alphabet = "abcdefghijklmnopqrstuvwx";
  return alphabet;
}

struct Chord {
  double low_hz;
  double high_hz;
};

/// Fixed chord per symbol, shared by every domain. The low tones are
/// log-spaced over 400-3000 Hz (inside a telephone band); the high tones are
/// log-spaced over 3700-7000 Hz in a permuted order, so they carry
/// independent evidence that only wide-band channels pass.
inline Chord TokenChord(char symbol) {
  const std::string &alphabet = SynthAlphabet();
  auto pos = alphabet.find(symbol);
  if (pos == std::string::npos) throw InvalidInput(StrCat("no chord for symbol '", symbol, "'"));
  const double n = static_cast<double>(alphabet.size() - 1);
  const double i = static_cast<double>(pos);
  const double j = static_cast<double>((pos * 7) % alphabet.size());
  return {400.0 * std::pow(3000.0 / 400.0, i / n), 3700.0 * std::pow(7000.0 / 3700.0, j / n)};
}

struct DomainSpec {
  std::string name;
  std::string token_inventory;
  // (|inventory| + 1) x |inventory|: row 0 is the initial distribution,
  // row i+1 the successor weights of inventory[i].
  MatrixD bigram_weights;
  double low_hz = 100.0;
  double high_hz = 7500.0;
  double noise_snr_db = 30.0;
  // Butterworth-magnitude order of each channel edge; 0 is a brick wall.
  int rolloff_order = 2;
  int min_tokens = 4;
  int max_tokens = 10;
  // Per-utterance relative frequency shift drawn from U[-s, s] ("speaker").
  double speaker_shift = 0.0;

  void Validate() const {
    const auto n = static_cast<Eigen::Index>(token_inventory.size());
    if (n == 0) throw InvalidInput("domain has an empty token inventory");
    for (char c : token_inventory) TokenChord(c);
    if (bigram_weights.rows() != n + 1 || bigram_weights.cols() != n)
      throw InvalidInput(StrCat("bigram table must be ", n + 1, "x", n));
    for (Eigen::Index r = 0; r < bigram_weights.rows(); ++r) {
      if ((bigram_weights.row(r).array() < 0.0).any()) throw InvalidInput("negative bigram weight");
      if (bigram_weights.row(r).maxCoeff() <= 0.0)
        throw InvalidInput(StrCat("bigram row ", r, " has no positive weight"));
    }
    if (!(low_hz >= 0.0 && low_hz < high_hz && high_hz < kSampleRate / 2.0))
      throw InvalidInput("channel must satisfy 0 <= low_hz < high_hz < 8000");
    if (min_tokens < 1 || max_tokens < min_tokens) throw InvalidInput("bad utterance length range");
    if (rolloff_order < 0) throw InvalidInput("rolloff_order must be >= 0");
  }
};

/// Bigram table where every symbol strongly prefers `preferred` successors
/// (weight 1) over the rest (weight `floor`). The initial row is uniform.
inline MatrixD MakeBigramTable(int num_symbols, uint64_t seed, int preferred = 3, double floor = 0.05) {
  MatrixD table = MatrixD::Constant(num_symbols + 1, num_symbols, floor);
  table.row(0).setOnes();
  Rng rng(seed);
  std::vector<int> order(num_symbols);
  for (int r = 1; r <= num_symbols; ++r) {
    for (int i = 0; i < num_symbols; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (int k = 0; k < std::min(preferred, num_symbols); ++k) table(r, order[k]) = 1.0;
  }
  return table;
}

/// Large clean wide-band domain (24 symbols, 100-7500 Hz, 30 dB SNR).
inline DomainSpec SourceDomain() {
  DomainSpec d;
  d.name = "source";
  d.token_inventory = SynthAlphabet();
  d.bigram_weights = MakeBigramTable(24, 0xA11CE);
  d.low_hz = 100.0;
  d.high_hz = 7500.0;
  d.noise_snr_db = 30.0;
  d.speaker_shift = 0.03;
  return d;
}

/// Small band-limited noisy domain (16-symbol subset, 300-3400 Hz, 15 dB)
/// with its own bigram statistics.
inline DomainSpec TargetDomain() {
  DomainSpec d;
  d.name = "target";
  d.token_inventory = SynthAlphabet().substr(0, 16);
  d.bigram_weights = MakeBigramTable(16, 0xB0B);
  d.low_hz = 300.0;
  d.high_hz = 3400.0;
  d.noise_snr_db = 15.0;
  d.speaker_shift = 0.03;
  return d;
}

namespace internal {

inline std::string SampleTranscript(const DomainSpec &spec, Rng &rng) {
  const int n = static_cast<int>(spec.token_inventory.size());
  int len = std::uniform_int_distribution<int>(spec.min_tokens, spec.max_tokens)(rng);
  std::string text;
  int row = 0;
  for (int k = 0; k < len; ++k) {
    const double *w = spec.bigram_weights.row(row).data();
    int next = std::discrete_distribution<int>(w, w + n)(rng);
    text.push_back(spec.token_inventory[next]);
    row = next + 1;
  }
  return text;
}

/// Zeroes every spectral component outside [low_hz, high_hz].
/// Zero-phase bandpass. order > 0 applies the magnitude response of a
/// Butterworth high-pass/low-pass pair with that order; order 0 removes
/// everything outside [low_hz, high_hz].
inline void Bandpass(std::vector<double> *signal, double low_hz, double high_hz, int order) {
  const size_t n = signal->size();
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, *signal);
  for (size_t k = 0; k < n; ++k) {
    size_t bin = std::min(k, n - k);
    double hz = bin * double(kSampleRate) / n;
    if (order == 0) {
      if (hz < low_hz || hz > high_hz) spec[k] = 0.0;
    } else {
      const double hp = hz > 0 ? std::pow(low_hz / hz, 2 * order) : std::numeric_limits<double>::infinity();
      const double lp = std::pow(hz / high_hz, 2 * order);
      spec[k] *= 1.0 / std::sqrt((1.0 + hp) * (1.0 + lp));
    }
  }
  std::vector<std::complex<double>> back;
  fft.inv(back, spec);
  for (size_t k = 0; k < n; ++k) (*signal)[k] = back[k].real();
}

inline std::vector<int16_t> RenderAudio(const DomainSpec &spec, const std::string &text, Rng &rng) {
  const size_t n = text.size() * kTokenSamples;
  std::vector<double> signal(n, 0.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double shift = 1.0 + spec.speaker_shift * (2.0 * unit(rng) - 1.0);
  for (size_t k = 0; k < text.size(); ++k) {
    Chord chord = TokenChord(text[k]);
    double amp_lo = 4000.0 * (0.6 + 0.4 * unit(rng)), amp_hi = 4000.0 * (0.6 + 0.4 * unit(rng));
    double ph_lo = 2.0 * std::numbers::pi * unit(rng), ph_hi = 2.0 * std::numbers::pi * unit(rng);
    double w_lo = 2.0 * std::numbers::pi * chord.low_hz * shift / kSampleRate;
    double w_hi = 2.0 * std::numbers::pi * chord.high_hz * shift / kSampleRate;
    for (int i = 0; i < kTokenSamples; ++i) {
      double ramp = 1.0;
      if (i < kRampSamples) ramp = 0.5 - 0.5 * std::cos(std::numbers::pi * i / kRampSamples);
      if (i >= kTokenSamples - kRampSamples)
        ramp = 0.5 - 0.5 * std::cos(std::numbers::pi * (kTokenSamples - 1 - i) / kRampSamples);
      signal[k * kTokenSamples + i] = ramp * (amp_lo * std::sin(w_lo * i + ph_lo) + amp_hi * std::sin(w_hi * i + ph_hi));
    }
  }
  Bandpass(&signal, spec.low_hz, spec.high_hz, spec.rolloff_order);
  double power = 0.0;
  for (double s : signal) power += s * s;
  power /= static_cast<double>(n);
  const double noise_std = std::sqrt(power / std::pow(10.0, spec.noise_snr_db / 10.0));
  std::normal_distribution<double> noise(0.0, noise_std);
  std::vector<int16_t> pcm(n);
  for (size_t i = 0; i < n; ++i) {
    double v = std::round(signal[i] + noise(rng));
    pcm[i] = static_cast<int16_t>(std::clamp(v, -32768.0, 32767.0));
  }
  return pcm;
}

}  // namespace internal

/// Generates `num_utts` utterances. Utterance i draws its transcript and its
/// audio from two separate streams keyed by (seed, i), so domains that
/// differ only in channel or noise share transcripts under equal seeds.
inline std::vector<Utterance> SynthGenerate(const DomainSpec &spec, int num_utts, uint64_t seed) {
  spec.Validate();
  if (num_utts < 1) throw InvalidInput("num_utts must be >= 1");
  std::vector<Utterance> utts;
  utts.reserve(num_utts);
  for (int i = 0; i < num_utts; ++i) {
    Rng text_rng(DeriveSeed(seed, {static_cast<uint64_t>(i), 0}));
    Rng audio_rng(DeriveSeed(seed, {static_cast<uint64_t>(i), 1}));
    Utterance u;
    std::ostringstream id;
    id << spec.name << '-' << std::setw(5) << std::setfill('0') << i;
    u.utt_id = id.str();
    u.transcript = internal::SampleTranscript(spec, text_rng);
    u.pcm = internal::RenderAudio(spec, u.transcript, audio_rng);
    utts.push_back(std::move(u));
  }
  return utts;
}

/// Desk-scale corpus sizes of the two fixtures.
struct FixtureSizes {
  int source_train = 2000;
  int source_test = 100;
  int target_train = 200;
  int target_dev = 100;
  int target_test = 100;
};

enum class FixtureSplit : uint64_t { kSourceTrain = 1, kSourceTest, kTargetTrain, kTargetDev, kTargetTest };

/// Generates one split of the fixtures. Splits draw from disjoint seed
/// streams of the same corpus seed.
inline std::vector<Utterance> FixtureCorpus(FixtureSplit split, int num_utts, uint64_t seed) {
  bool source = split == FixtureSplit::kSourceTrain || split == FixtureSplit::kSourceTest;
  DomainSpec spec = source ? SourceDomain() : TargetDomain();
  static const char *kNames[] = {"", "src-train", "src-test", "tgt-train", "tgt-dev", "tgt-test"};
  spec.name = kNames[static_cast<int>(split)];
  return SynthGenerate(spec, num_utts, DeriveSeed(seed, {static_cast<uint64_t>(split)}));
}

}  // namespace enctap

#endif  // ENCTAP_DATA_SYNTH_H_
