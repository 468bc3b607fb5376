// enctap/data/tokenizer.h

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

#ifndef ENCTAP_DATA_TOKENIZER_H_
#define ENCTAP_DATA_TOKENIZER_H_

#include <map>
#include <set>
#include <string>
#include <vector>

#include "enctap/base/error.h"

namespace enctap {

/// Character-level tokenizer. Ids 0..3 are reserved for blank, unk,
/// start-of-sequence and end-of-sequence; the remaining ids are the
/// corpus characters in byte order, always including the space character.
///
/// The interface (Encode/Decode over id sequences, serializable symbol
/// list) is what a subword tokenizer would have to provide as well.
class Tokenizer {
 public:
  static constexpr int kBlank = 0;
  static constexpr int kUnk = 1;
  static constexpr int kSos = 2;
  static constexpr int kEos = 3;
  static constexpr int kNumReserved = 4;

  Tokenizer() = default;

  static Tokenizer Build(const std::vector<std::string> &transcripts) {
    if (transcripts.empty()) throw InvalidInput("cannot build a tokenizer from an empty corpus");
    std::set<char> chars{' '};
    for (const auto &t : transcripts) chars.insert(t.begin(), t.end());
    std::vector<std::string> symbols = {"<blank>", "<unk>", "<sos>", "<eos>"};
    for (char c : chars) symbols.emplace_back(1, c);
    return FromSymbols(symbols);
  }

  static Tokenizer FromSymbols(const std::vector<std::string> &symbols) {
    if (symbols.size() < kNumReserved || symbols[kBlank] != "<blank>" || symbols[kUnk] != "<unk>" ||
        symbols[kSos] != "<sos>" || symbols[kEos] != "<eos>")
      throw InvalidInput("tokenizer symbol list must start with <blank> <unk> <sos> <eos>");
    Tokenizer tok;
    tok.symbols_ = symbols;
    for (size_t i = kNumReserved; i < symbols.size(); ++i) {
      if (symbols[i].size() != 1) throw InvalidInput(StrCat("non-character symbol '", symbols[i], "'"));
      tok.ids_[symbols[i][0]] = static_cast<int>(i);
    }
    return tok;
  }

  /// Unknown characters map to kUnk; `num_unk` receives how many did.
  std::vector<int> Encode(const std::string &text, int *num_unk = nullptr) const {
    std::vector<int> ids;
    ids.reserve(text.size());
    int unk = 0;
    for (char c : text) {
      auto it = ids_.find(c);
      if (it == ids_.end()) {
        ids.push_back(kUnk);
        ++unk;
      } else {
        ids.push_back(it->second);
      }
    }
    if (num_unk) *num_unk = unk;
    return ids;
  }

  /// Reserved ids decode to nothing except unk, which decodes to '?'.
  std::string Decode(const std::vector<int> &ids) const {
    std::string out;
    for (int id : ids) {
      if (id == kUnk) {
        out.push_back('?');
      } else if (id >= kNumReserved && id < Size()) {
        out += symbols_[id];
      }
    }
    return out;
  }

  int Size() const { return static_cast<int>(symbols_.size()); }
  const std::vector<std::string> &Symbols() const { return symbols_; }
  bool operator==(const Tokenizer &o) const { return symbols_ == o.symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::map<char, int> ids_;
};

}  // namespace enctap

#endif  // ENCTAP_DATA_TOKENIZER_H_
