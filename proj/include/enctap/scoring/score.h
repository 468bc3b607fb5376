// enctap/scoring/score.h

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

#ifndef ENCTAP_SCORING_SCORE_H_
#define ENCTAP_SCORING_SCORE_H_

#include <cctype>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "enctap/base/error.h"
#include "enctap/scoring/edit-distance.h"

namespace enctap {

enum class ScoreUnit { kWord, kChar };

struct ScoredPair {
  std::string utt_id;
  std::string ref;
  std::string hyp;
};

struct UtteranceScore {
  std::string utt_id;
  int ref_len = 0;
  EditCounts counts;
};

struct ScoreReport {
  EditCounts counts;
  int ref_tokens = 0;
  std::vector<UtteranceScore> per_utterance;

  /// Corpus-pooled error rate in percent. An empty reference set scores 0
  /// when there are no insertions and 100 otherwise.
  double ErrorRate() const {
    if (ref_tokens == 0) return counts.Total() == 0 ? 0.0 : 100.0;
    return 100.0 * counts.Total() / ref_tokens;
  }
};

/// Lowercase and collapse runs of whitespace; leading/trailing space dropped.
inline std::string NormalizeText(const std::string &text) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

/// Word mode splits on spaces; char mode keeps every byte, spaces included.
inline std::vector<std::string> Tokenize(const std::string &normalized, ScoreUnit unit) {
  std::vector<std::string> out;
  if (unit == ScoreUnit::kChar) {
    for (char c : normalized) out.emplace_back(1, c);
    return out;
  }
  std::istringstream is(normalized);
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

inline ScoreReport ScoreCorpus(const std::vector<ScoredPair> &pairs, ScoreUnit unit) {
  ScoreReport report;
  std::set<std::string> ids;
  for (const auto &p : pairs) {
    if (!ids.insert(p.utt_id).second) throw InvalidInput(StrCat("duplicate utterance id '", p.utt_id, "'"));
    auto ref = Tokenize(NormalizeText(p.ref), unit);
    auto hyp = Tokenize(NormalizeText(p.hyp), unit);
    UtteranceScore u{p.utt_id, static_cast<int>(ref.size()), EditDistance(ref, hyp)};
    report.counts += u.counts;
    report.ref_tokens += u.ref_len;
    report.per_utterance.push_back(std::move(u));
  }
  return report;
}

/// CSV: utt_id,ref_len,S,D,I,wer with a final TOTAL row.
inline void WriteScoreCsv(const ScoreReport &report, std::ostream &os) {
  auto rate = [](const EditCounts &c, int n) {
    return n == 0 ? (c.Total() == 0 ? 0.0 : 100.0) : 100.0 * c.Total() / n;
  };
  os << "utt_id,ref_len,S,D,I,wer\n" << std::fixed << std::setprecision(2);
  for (const auto &u : report.per_utterance)
    os << u.utt_id << ',' << u.ref_len << ',' << u.counts.substitutions << ',' << u.counts.deletions << ','
       << u.counts.insertions << ',' << rate(u.counts, u.ref_len) << '\n';
  os << "TOTAL," << report.ref_tokens << ',' << report.counts.substitutions << ',' << report.counts.deletions << ','
     << report.counts.insertions << ',' << report.ErrorRate() << '\n';
}

inline void WriteScoreCsv(const ScoreReport &report, const std::string &path) {
  std::ofstream os(path);
  if (!os) throw Error(StrCat("cannot write ", path));
  WriteScoreCsv(report, os);
}

}  // namespace enctap

#endif  // ENCTAP_SCORING_SCORE_H_
