// enctap/frontend/wav-io.h

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

#ifndef ENCTAP_FRONTEND_WAV_IO_H_
#define ENCTAP_FRONTEND_WAV_IO_H_

#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "enctap/base/error.h"

namespace enctap {

inline constexpr int kSampleRate = 16000;

namespace internal {
inline uint32_t ReadU32(const unsigned char *p) {
  return uint32_t(p[0]) | (uint32_t(p[1]) << 8) | (uint32_t(p[2]) << 16) |
         (uint32_t(p[3]) << 24);
}
inline uint16_t ReadU16(const unsigned char *p) {
  return uint16_t(p[0] | (p[1] << 8));
}
inline void PutU32(std::string *s, uint32_t v) {
  for (int i = 0; i < 4; ++i) s->push_back(char((v >> (8 * i)) & 0xff));
}
inline void PutU16(std::string *s, uint16_t v) {
  s->push_back(char(v & 0xff));
  s->push_back(char(v >> 8));
}
}  // namespace internal

/// Parses an in-memory RIFF/WAVE image. Only mono PCM-16 at 16 kHz is
/// accepted; anything else is rejected rather than resampled.
inline std::vector<int16_t> ParseWav(const std::string &bytes, const std::string &origin = "<memory>") {
  using internal::ReadU16;
  using internal::ReadU32;
  const auto *b = reinterpret_cast<const unsigned char *>(bytes.data());
  if (bytes.size() < 12 || std::memcmp(b, "RIFF", 4) != 0 || std::memcmp(b + 8, "WAVE", 4) != 0)
    throw ParseError(StrCat(origin, ": not a RIFF/WAVE file"));
  size_t pos = 12;
  bool have_fmt = false;
  std::vector<int16_t> samples;
  bool have_data = false;
  while (pos + 8 <= bytes.size()) {
    const unsigned char *chunk = b + pos;
    uint32_t size = ReadU32(chunk + 4);
    size_t body = pos + 8;
    if (body + size > bytes.size()) throw ParseError(StrCat(origin, ": truncated chunk"));
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw ParseError(StrCat(origin, ": short fmt chunk"));
      uint16_t format = ReadU16(b + body);
      uint16_t channels = ReadU16(b + body + 2);
      uint32_t rate = ReadU32(b + body + 4);
      uint16_t bits = ReadU16(b + body + 14);
      if (format != 1) throw InvalidInput(StrCat(origin, ": only PCM WAV is supported (format ", format, ")"));
      if (channels != 1) throw InvalidInput(StrCat(origin, ": expected mono audio, got ", channels, " channels"));
      if (bits != 16) throw InvalidInput(StrCat(origin, ": expected 16-bit samples, got ", bits));
      if (rate != kSampleRate)
        throw InvalidInput(StrCat(origin, ": expected ", kSampleRate, " Hz audio, got ", rate,
                                  " Hz (resampling is not supported)"));
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw ParseError(StrCat(origin, ": data chunk before fmt chunk"));
      samples.resize(size / 2);
      for (size_t i = 0; i < samples.size(); ++i)
        samples[i] = static_cast<int16_t>(ReadU16(b + body + 2 * i));
      have_data = true;
    }
    pos = body + size + (size & 1);
  }
  if (!have_data) throw ParseError(StrCat(origin, ": no data chunk"));
  return samples;
}

inline std::string EncodeWav(std::span<const int16_t> samples) {
  using internal::PutU16;
  using internal::PutU32;
  std::string out;
  uint32_t data_bytes = static_cast<uint32_t>(samples.size() * 2);
  out.reserve(44 + data_bytes);
  out += "RIFF";
  PutU32(&out, 36 + data_bytes);
  out += "WAVEfmt ";
  PutU32(&out, 16);
  PutU16(&out, 1);
  PutU16(&out, 1);
  PutU32(&out, kSampleRate);
  PutU32(&out, kSampleRate * 2);
  PutU16(&out, 2);
  PutU16(&out, 16);
  out += "data";
  PutU32(&out, data_bytes);
  for (int16_t s : samples) PutU16(&out, static_cast<uint16_t>(s));
  return out;
}

inline std::vector<int16_t> ReadWav(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidInput(StrCat("cannot open audio file ", path));
  std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return ParseWav(bytes, path);
}

inline void WriteWav(const std::string &path, std::span<const int16_t> samples) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(StrCat("cannot write ", path));
  std::string bytes = EncodeWav(samples);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw Error(StrCat("write failed: ", path));
}

}  // namespace enctap

#endif  // ENCTAP_FRONTEND_WAV_IO_H_
