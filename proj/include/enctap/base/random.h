// enctap/base/random.h

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

#ifndef ENCTAP_BASE_RANDOM_H_
#define ENCTAP_BASE_RANDOM_H_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace enctap {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
inline uint64_t MixSeed(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Derives an independent seed for a sub-stream, e.g.
/// DeriveSeed(run_seed, {kDropoutStream, step}). Everything random in a
/// training run is keyed this way so that a resumed run replays exactly.
inline uint64_t DeriveSeed(uint64_t seed, std::initializer_list<uint64_t> keys) {
  uint64_t h = MixSeed(seed);
  for (uint64_t k : keys) h = MixSeed(h ^ MixSeed(k + 0x632be59bd9b4e019ull));
  return h;
}

}  // namespace enctap

#endif  // ENCTAP_BASE_RANDOM_H_
