// tests/scoring-test.cc

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
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "enctap/scoring/edit-distance.h"
#include "enctap/scoring/score.h"
#include "oracles.h"

namespace enctap {
namespace {

using oracle::BruteDistance;

std::vector<int> RandomSeq(std::mt19937 &rng, int max_len, int alphabet) {
  std::vector<int> s(std::uniform_int_distribution<int>(0, max_len)(rng));
  for (int &x : s) x = std::uniform_int_distribution<int>(0, alphabet - 1)(rng);
  return s;
}

TEST(EditDistance, BasicCases) {
  std::string kitten = "kitten", sitting = "sitting";
  EXPECT_EQ(EditDistance(kitten, sitting).Total(), 3);
  std::vector<int> a{1, 2, 3}, empty;
  EXPECT_EQ(EditDistance(a, a), EditCounts{});
  EditCounts ins = EditDistance(empty, a);
  EXPECT_EQ(ins, (EditCounts{0, 0, 3}));
  EditCounts del = EditDistance(a, empty);
  EXPECT_EQ(del, (EditCounts{0, 3, 0}));
}

TEST(EditDistance, PrefersSubstitutionOnTies) {
  std::vector<int> ref{1}, hyp{2};
  EXPECT_EQ(EditDistance(ref, hyp), (EditCounts{1, 0, 0}));
}

TEST(EditDistance, MatchesBruteForceOnRandomPairs) {
  std::mt19937 rng(11);
  for (int t = 0; t < 3000; ++t) {
    auto a = RandomSeq(rng, 6, 4), b = RandomSeq(rng, 6, 4);
    EditCounts c = EditDistance(a, b);
    ASSERT_EQ(c.Total(), BruteDistance(a, 0, b, 0));
    ASSERT_EQ(c.deletions - c.insertions, int(a.size()) - int(b.size()));
  }
}

TEST(EditDistance, SymmetricWithDeletionsAndInsertionsSwapped) {
  std::mt19937 rng(12);
  for (int t = 0; t < 2000; ++t) {
    auto a = RandomSeq(rng, 8, 3), b = RandomSeq(rng, 8, 3);
    EditCounts ab = EditDistance(a, b), ba = EditDistance(b, a);
    ASSERT_EQ(ab.Total(), ba.Total());
    ASSERT_EQ(ab.substitutions, ba.substitutions);
    ASSERT_EQ(ab.deletions, ba.insertions);
    ASSERT_EQ(ab.insertions, ba.deletions);
  }
}

TEST(EditDistance, TriangleInequality) {
  std::mt19937 rng(13);
  for (int t = 0; t < 2000; ++t) {
    auto a = RandomSeq(rng, 7, 3), b = RandomSeq(rng, 7, 3), c = RandomSeq(rng, 7, 3);
    ASSERT_LE(EditDistance(a, c).Total(), EditDistance(a, b).Total() + EditDistance(b, c).Total());
  }
}

TEST(ScoreCorpus, PerfectAndSingleSubstitution) {
  EXPECT_EQ(ScoreCorpus({{"u1", "a b c d", "a b c d"}}, ScoreUnit::kWord).ErrorRate(), 0.0);
  EXPECT_EQ(ScoreCorpus({{"u1", "a b c d", "a x c d"}}, ScoreUnit::kWord).ErrorRate(), 25.0);
}

TEST(ScoreCorpus, PoolsCountsInsteadOfAveragingRates) {
  ScoreReport r = ScoreCorpus({{"u1", "one two", "one too"}, {"u2", "a b c d e f", "a b c d e f"}}, ScoreUnit::kWord);
  EXPECT_EQ(r.ErrorRate(), 12.5);
  EXPECT_EQ(r.ref_tokens, 8);
  EditCounts sum;
  for (const auto &u : r.per_utterance) sum += u.counts;
  EXPECT_EQ(sum, r.counts);
}

TEST(ScoreCorpus, NormalizesCaseAndWhitespace) {
  EXPECT_EQ(NormalizeText("  Hello   WORLD \t x "), "hello world x");
  EXPECT_EQ(ScoreCorpus({{"u", "Hello  world", "hello world"}}, ScoreUnit::kWord).ErrorRate(), 0.0);
}

TEST(ScoreCorpus, CharacterUnitsCountSpaces) {
  ScoreReport r = ScoreCorpus({{"u", "ab cd", "abcd"}}, ScoreUnit::kChar);
  EXPECT_EQ(r.ref_tokens, 5);
  EXPECT_EQ(r.counts.deletions, 1);
}

TEST(ScoreCorpus, RejectsDuplicateIds) {
  EXPECT_THROW(ScoreCorpus({{"u", "a", "a"}, {"u", "b", "b"}}, ScoreUnit::kWord), InvalidInput);
}

TEST(ScoreCorpus, CsvHasTotalRow) {
  ScoreReport r = ScoreCorpus({{"u1", "one two", "one too"}, {"u2", "a b", "a b c"}}, ScoreUnit::kWord);
  std::ostringstream os;
  WriteScoreCsv(r, os);
  EXPECT_EQ(os.str(),
            "utt_id,ref_len,S,D,I,wer\n"
            "u1,2,1,0,0,50.00\n"
            "u2,2,0,0,1,50.00\n"
            "TOTAL,4,1,0,1,50.00\n");
}

}  // namespace
}  // namespace enctap
