// enctap/scoring/edit-distance.h

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

#ifndef ENCTAP_SCORING_EDIT_DISTANCE_H_
#define ENCTAP_SCORING_EDIT_DISTANCE_H_

#include <algorithm>
#include <span>
#include <utility>
#include <vector>

namespace enctap {

struct EditCounts {
  int substitutions = 0;
  int deletions = 0;
  int insertions = 0;

  int Total() const { return substitutions + deletions + insertions; }
  EditCounts &operator+=(const EditCounts &o) {
    substitutions += o.substitutions;
    deletions += o.deletions;
    insertions += o.insertions;
    return *this;
  }
  bool operator==(const EditCounts &) const = default;
};

/// Levenshtein alignment of hyp against ref. Among the alignments of
/// minimal S+D+I the one with the most substitutions (fewest deletions and
/// insertions) is chosen, so S is independent of argument order and
/// swapping ref/hyp swaps D and I.
template <typename Token>
EditCounts EditDistance(std::span<const Token> ref, std::span<const Token> hyp) {
  const size_t n = ref.size(), m = hyp.size();
  // Cost of a cell: (errors, indels), compared lexicographically.
  using Cost = std::pair<int, int>;
  std::vector<Cost> cost((n + 1) * (m + 1));
  auto at = [&](size_t i, size_t j) -> Cost & { return cost[i * (m + 1) + j]; };
  for (size_t i = 0; i <= n; ++i) at(i, 0) = {static_cast<int>(i), static_cast<int>(i)};
  for (size_t j = 0; j <= m; ++j) at(0, j) = {static_cast<int>(j), static_cast<int>(j)};
  auto step = [](Cost c, int errors, int indels) { return Cost{c.first + errors, c.second + indels}; };
  for (size_t i = 1; i <= n; ++i) {
    for (size_t j = 1; j <= m; ++j) {
      Cost diag = step(at(i - 1, j - 1), ref[i - 1] == hyp[j - 1] ? 0 : 1, 0);
      at(i, j) = std::min({diag, step(at(i - 1, j), 1, 1), step(at(i, j - 1), 1, 1)});
    }
  }
  EditCounts counts;
  size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      bool match = ref[i - 1] == hyp[j - 1];
      if (at(i, j) == step(at(i - 1, j - 1), match ? 0 : 1, 0)) {
        if (!match) ++counts.substitutions;
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && at(i, j) == step(at(i - 1, j), 1, 1)) {
      ++counts.deletions;
      --i;
    } else {
      ++counts.insertions;
      --j;
    }
  }
  return counts;
}

template <typename Container>
EditCounts EditDistance(const Container &ref, const Container &hyp) {
  using Token = typename Container::value_type;
  return EditDistance<Token>(std::span<const Token>(ref.data(), ref.size()),
                             std::span<const Token>(hyp.data(), hyp.size()));
}

}  // namespace enctap

#endif  // ENCTAP_SCORING_EDIT_DISTANCE_H_
