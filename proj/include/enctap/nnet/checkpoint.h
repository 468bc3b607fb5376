// enctap/nnet/checkpoint.h

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

// Binary checkpoint container (little-endian):
//
//   "ENCTAPCK"  u32 format_version
//   u32 n, n x (str key, str value)        architecture / training header
//   u32 n, n x str                         tokenizer symbols
//   u64 step
//   u32 n, n x (str name, i32 rows, i32 cols, f32[rows*cols])   parameters
//   u32 n, n x (same)                      optimizer state
//
// where str is u32 length + bytes. Values are stored as float32 and are
// reproduced bit-exactly by a load.

#ifndef ENCTAP_NNET_CHECKPOINT_H_
#define ENCTAP_NNET_CHECKPOINT_H_

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "enctap/autograd/graph.h"
#include "enctap/base/error.h"
#include "enctap/nnet/config.h"

namespace enctap {

inline constexpr uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[8] = {'E', 'N', 'C', 'T', 'A', 'P', 'C', 'K'};

using NamedArrays = std::vector<std::pair<std::string, MatrixF>>;

struct Checkpoint {
  uint32_t format_version = kCheckpointVersion;
  KeyValues header;
  std::vector<std::string> vocabulary;
  uint64_t step = 0;
  NamedArrays params;
  NamedArrays optimizer_state;

  const MatrixF *FindParam(const std::string &name) const {
    for (const auto &[n, m] : params)
      if (n == name) return &m;
    return nullptr;
  }
};

namespace internal {

class Writer {
 public:
  explicit Writer(std::ostream &os) : os_(os) {}
  template <typename T>
  void Pod(T v) {
    os_.write(reinterpret_cast<const char *>(&v), sizeof(T));
  }
  void Str(const std::string &s) {
    Pod<uint32_t>(static_cast<uint32_t>(s.size()));
    os_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void Arrays(const NamedArrays &arrays) {
    Pod<uint32_t>(static_cast<uint32_t>(arrays.size()));
    for (const auto &[name, m] : arrays) {
      Str(name);
      Pod<int32_t>(static_cast<int32_t>(m.rows()));
      Pod<int32_t>(static_cast<int32_t>(m.cols()));
      os_.write(reinterpret_cast<const char *>(m.data()), static_cast<std::streamsize>(sizeof(float) * m.size()));
    }
  }

 private:
  std::ostream &os_;
};

class Reader {
 public:
  Reader(std::istream &is, std::string origin) : is_(is), origin_(std::move(origin)) {}
  template <typename T>
  T Pod() {
    T v{};
    is_.read(reinterpret_cast<char *>(&v), sizeof(T));
    if (!is_) Fail("unexpected end of file");
    return v;
  }
  std::string Str() {
    uint32_t n = Pod<uint32_t>();
    if (n > (1u << 24)) Fail("implausible string length");
    std::string s(n, '\0');
    is_.read(s.data(), n);
    if (!is_) Fail("unexpected end of file");
    return s;
  }
  NamedArrays Arrays() {
    NamedArrays out;
    uint32_t n = Pod<uint32_t>();
    for (uint32_t i = 0; i < n; ++i) {
      std::string name = Str();
      int32_t rows = Pod<int32_t>(), cols = Pod<int32_t>();
      if (rows < 0 || cols < 0 || int64_t(rows) * cols > (int64_t(1) << 31)) Fail("bad array shape for " + name);
      MatrixF m(rows, cols);
      is_.read(reinterpret_cast<char *>(m.data()), static_cast<std::streamsize>(sizeof(float) * m.size()));
      if (!is_) Fail("truncated array " + name);
      out.emplace_back(std::move(name), std::move(m));
    }
    return out;
  }
  [[noreturn]] void Fail(const std::string &why) { throw LoadError(StrCat(origin_, ": ", why)); }

 private:
  std::istream &is_;
  std::string origin_;
};

}  // namespace internal

inline void WriteCheckpoint(const Checkpoint &ckpt, std::ostream &os) {
  internal::Writer w(os);
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.Pod<uint32_t>(ckpt.format_version);
  w.Pod<uint32_t>(static_cast<uint32_t>(ckpt.header.size()));
  for (const auto &[k, v] : ckpt.header) {
    w.Str(k);
    w.Str(v);
  }
  w.Pod<uint32_t>(static_cast<uint32_t>(ckpt.vocabulary.size()));
  for (const auto &s : ckpt.vocabulary) w.Str(s);
  w.Pod<uint64_t>(ckpt.step);
  w.Arrays(ckpt.params);
  w.Arrays(ckpt.optimizer_state);
}

/// Rejects files whose magic or format version differ.
inline Checkpoint ReadCheckpoint(std::istream &is, const std::string &origin = "<stream>") {
  internal::Reader r(is, origin);
  char magic[sizeof(kCheckpointMagic)];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) r.Fail("not an enctap checkpoint");
  Checkpoint ckpt;
  ckpt.format_version = r.Pod<uint32_t>();
  if (ckpt.format_version != kCheckpointVersion)
    r.Fail(StrCat("checkpoint format version ", ckpt.format_version, " is not supported (expected ",
                  kCheckpointVersion, ")"));
  uint32_t n = r.Pod<uint32_t>();
  for (uint32_t i = 0; i < n; ++i) {
    std::string k = r.Str();
    ckpt.header[k] = r.Str();
  }
  n = r.Pod<uint32_t>();
  for (uint32_t i = 0; i < n; ++i) ckpt.vocabulary.push_back(r.Str());
  ckpt.step = r.Pod<uint64_t>();
  ckpt.params = r.Arrays();
  ckpt.optimizer_state = r.Arrays();
  return ckpt;
}

inline void SaveCheckpoint(const Checkpoint &ckpt, const std::string &path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(StrCat("cannot write checkpoint ", path));
  WriteCheckpoint(ckpt, os);
  if (!os) throw Error(StrCat("write failed: ", path));
}

inline Checkpoint LoadCheckpoint(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw LoadError(StrCat("cannot open checkpoint ", path));
  return ReadCheckpoint(is, path);
}

template <typename Real>
NamedArrays ExportParams(const ParameterSet<Real> &params) {
  NamedArrays out;
  for (const auto &p : params.All()) out.emplace_back(p->name, p->value.template cast<float>());
  return out;
}

/// Copies every named array into `params`. Throws IncompatibleArchitecture
/// listing all missing names and shape mismatches.
template <typename Real>
void ImportParams(const NamedArrays &arrays, ParameterSet<Real> *params) {
  std::vector<std::string> problems;
  for (const auto &[name, m] : arrays) {
    Parameter<Real> *p = params->Find(name);
    if (!p) {
      problems.push_back(name + " (unexpected)");
      continue;
    }
    if (p->value.rows() != m.rows() || p->value.cols() != m.cols()) {
      problems.push_back(StrCat(name, " (shape ", m.rows(), "x", m.cols(), " vs ", p->value.rows(), "x",
                                p->value.cols(), ")"));
      continue;
    }
    p->value = m.template cast<Real>();
  }
  for (const auto &p : params->All()) {
    bool found = false;
    for (const auto &a : arrays) found = found || a.first == p->name;
    if (!found) problems.push_back(p->name + " (missing)");
  }
  if (!problems.empty()) {
    std::ostringstream os;
    os << "incompatible parameters:";
    for (const auto &s : problems) os << ' ' << s;
    throw IncompatibleArchitecture(os.str());
  }
}

}  // namespace enctap

#endif  // ENCTAP_NNET_CHECKPOINT_H_
