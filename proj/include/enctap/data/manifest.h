// enctap/data/manifest.h

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

#ifndef ENCTAP_DATA_MANIFEST_H_
#define ENCTAP_DATA_MANIFEST_H_

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "enctap/base/error.h"
#include "enctap/frontend/wav-io.h"

namespace enctap {

/// One labelled recording. Audio is either held in memory (`pcm`) or
/// referenced by path and read on demand.
struct Utterance {
  std::string utt_id;
  std::string audio_path;
  std::vector<int16_t> pcm;
  std::string transcript;

  std::vector<int16_t> Audio() const { return pcm.empty() ? ReadWav(audio_path) : pcm; }
};

/// Collapses whitespace runs to single spaces and trims both ends.
inline std::string CollapseWhitespace(const std::string &text) {
  std::string out;
  bool pending = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(' ');
    pending = false;
    out.push_back(static_cast<char>(c));
  }
  return out;
}

/// Reads `utt_id<TAB>audio_path<TAB>transcript` lines. Relative audio paths
/// are resolved against the manifest's directory. Blank lines are skipped.
inline std::vector<Utterance> LoadManifest(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw InvalidInput(StrCat("cannot open manifest ", path));
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  std::vector<Utterance> utts;
  std::unordered_set<std::string> ids;
  std::string line;
  for (int lineno = 1; std::getline(is, line); ++lineno) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::string> fields;
    size_t start = 0;
    for (size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1)
      fields.push_back(line.substr(start, tab - start));
    fields.push_back(line.substr(start));
    if (fields.size() != 3)
      throw ParseError(StrCat(path, ":", lineno, ": expected 3 tab-separated fields, got ", fields.size()));
    Utterance u;
    u.utt_id = fields[0];
    if (u.utt_id.empty()) throw ParseError(StrCat(path, ":", lineno, ": empty utterance id"));
    std::filesystem::path audio(fields[1]);
    u.audio_path = audio.is_absolute() || base.empty() ? audio.string() : (base / audio).string();
    u.transcript = CollapseWhitespace(fields[2]);
    if (u.transcript.empty()) throw ParseError(StrCat(path, ":", lineno, ": empty transcript"));
    if (!ids.insert(u.utt_id).second)
      throw ParseError(StrCat(path, ":", lineno, ": duplicate utterance id '", u.utt_id, "'"));
    utts.push_back(std::move(u));
  }
  return utts;
}

/// Writes a manifest; audio paths are written as given.
inline void WriteManifest(const std::string &path, const std::vector<Utterance> &utts) {
  std::ofstream os(path);
  if (!os) throw Error(StrCat("cannot write manifest ", path));
  for (const auto &u : utts) os << u.utt_id << '\t' << u.audio_path << '\t' << u.transcript << '\n';
  if (!os) throw Error(StrCat("write failed: ", path));
}

}  // namespace enctap

#endif  // ENCTAP_DATA_MANIFEST_H_
