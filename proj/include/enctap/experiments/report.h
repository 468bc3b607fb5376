// enctap/experiments/report.h

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

#ifndef ENCTAP_EXPERIMENTS_REPORT_H_
#define ENCTAP_EXPERIMENTS_REPORT_H_

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "enctap/base/error.h"

namespace enctap {

/// One line of an ablation table. Error rates are percentages; NaN marks a
/// cell that failed (see `note`).
struct ResultRow {
  std::string mode;  // baseline | vanilla | tap | direct
  int tap_k = 0;
  bool freeze = false;
  int specaug_f = 0;
  int specaug_t = 0;
  double dev_wer = std::numeric_limits<double>::quiet_NaN();
  double test_wer = std::numeric_limits<double>::quiet_NaN();
  double rel_improvement = std::numeric_limits<double>::quiet_NaN();
  std::string note;
};

/// 100 * (baseline - x) / baseline.
inline double RelativeImprovement(double baseline, double x) {
  if (!(baseline > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return 100.0 * (baseline - x) / baseline;
}

/// Fills rel_improvement of every row from the (first) baseline row's
/// test error rate.
inline void AddRelativeImprovement(std::vector<ResultRow> *rows) {
  const ResultRow *base = nullptr;
  for (const auto &r : *rows)
    if (r.mode == "baseline") {
      base = &r;
      break;
    }
  if (!base) throw InvalidInput("results table has no baseline row");
  const double b = base->test_wer;
  for (auto &r : *rows) r.rel_improvement = RelativeImprovement(b, r.test_wer);
}

namespace internal {
inline std::string Num(double v, int precision = 2) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}
inline std::string CsvField(const std::string &s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}
inline std::vector<std::string> SplitCsvLine(const std::string &line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}
}  // namespace internal

inline const char *kResultsHeader = "mode,K,freeze,specaug_F,specaug_T,dev_wer,test_wer,rel_improvement,note";

inline void WriteResultsCsv(const std::vector<ResultRow> &rows, std::ostream &os) {
  using internal::Num;
  os << kResultsHeader << '\n';
  for (const auto &r : rows)
    os << r.mode << ',' << r.tap_k << ',' << (r.freeze ? "true" : "false") << ',' << r.specaug_f << ','
       << r.specaug_t << ',' << Num(r.dev_wer) << ',' << Num(r.test_wer) << ',' << Num(r.rel_improvement) << ','
       << internal::CsvField(r.note) << '\n';
}

inline void WriteResultsCsv(const std::vector<ResultRow> &rows, const std::string &path) {
  std::ofstream os(path);
  if (!os) throw Error(StrCat("cannot write ", path));
  WriteResultsCsv(rows, os);
}

inline std::vector<ResultRow> ReadResultsCsv(std::istream &is, const std::string &origin = "<results>") {
  std::vector<ResultRow> rows;
  std::string line;
  int lineno = 0;
  auto num = [&](const std::string &s) {
    if (s == "nan" || s.empty()) return std::numeric_limits<double>::quiet_NaN();
    try {
      size_t used = 0;
      double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception &) {
      throw ParseError(StrCat(origin, ":", lineno, ": bad number '", s, "'"));
    }
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("mode,", 0) == 0) continue;
    auto f = internal::SplitCsvLine(line);
    if (f.size() < 7) throw ParseError(StrCat(origin, ":", lineno, ": expected at least 7 fields"));
    ResultRow r;
    r.mode = f[0];
    r.tap_k = static_cast<int>(num(f[1]));
    r.freeze = f[2] == "true" || f[2] == "1";
    r.specaug_f = static_cast<int>(num(f[3]));
    r.specaug_t = static_cast<int>(num(f[4]));
    r.dev_wer = num(f[5]);
    r.test_wer = num(f[6]);
    if (f.size() > 7) r.rel_improvement = num(f[7]);
    if (f.size() > 8) r.note = f[8];
    rows.push_back(r);
  }
  return rows;
}

inline std::vector<ResultRow> ReadResultsCsv(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw ParseError(StrCat("cannot read ", path));
  return ReadResultsCsv(is, path);
}

/// Markdown table with the relative-improvement column recomputed against
/// the baseline row.
inline std::string RenderMarkdown(std::vector<ResultRow> rows) {
  using internal::Num;
  AddRelativeImprovement(&rows);
  std::ostringstream os;
  os << "| mode | K | prefix | SpecAug F | SpecAug T | dev ER% | test ER% | rel. impr. % |\n"
     << "|---|---|---|---|---|---|---|---|\n";
  for (const auto &r : rows) {
    bool tap = r.mode == "tap";
    os << "| " << r.mode << " | " << (tap ? std::to_string(r.tap_k) : "-") << " | "
       << (tap ? (r.freeze ? "frozen" : "updated") : "-") << " | " << (r.specaug_f || r.specaug_t ? std::to_string(r.specaug_f) : "-")
       << " | " << (r.specaug_f || r.specaug_t ? std::to_string(r.specaug_t) : "-") << " | " << Num(r.dev_wer) << " | "
       << Num(r.test_wer) << " | " << (r.mode == "baseline" ? "-" : Num(r.rel_improvement, 1)) << " |";
    if (!r.note.empty()) os << " " << r.note;
    os << '\n';
  }
  return os.str();
}

}  // namespace enctap

#endif  // ENCTAP_EXPERIMENTS_REPORT_H_
