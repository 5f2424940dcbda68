/* Copyright 2026 The QbeKws Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <gtest/gtest.h>

#include <random>

#include "kws/common.h"
#include "kws/ctc.h"
#include "oracles.h"

namespace kws {
namespace {

Posteriorgram from_rows(const std::vector<std::vector<double>>& rows) {
  Posteriorgram p(testing::letters_alphabet(static_cast<int>(rows[0].size())));
  for (const auto& r : rows) p.append_row(r);
  return p;
}

TEST(Ctc, HandComputedTwoFrames) {
  // Two frames, K = 2. Sequence "a" arises from (a,a), (a,b), (b,a):
  // 0.6*0.3 + 0.6*0.7 + 0.4*0.3 = 0.72.
  const Posteriorgram p = from_rows({{0.4, 0.6}, {0.7, 0.3}});
  EXPECT_NEAR(forward_logprob(p, {1}), std::log(0.72), 1e-15);
  EXPECT_NEAR(forward_logprob(p, {}), std::log(0.28), 1e-15);
  EXPECT_EQ(forward_logprob(p, {1, 1}), kLogZero);  // needs a blank between
}

TEST(Ctc, RepeatedLabelNeedsThreeFrames) {
  const Posteriorgram p = from_rows({{0.2, 0.8}, {0.5, 0.5}, {0.1, 0.9}});
  // Only a,blank,a collapses to "aa".
  EXPECT_NEAR(forward_logprob(p, {1, 1}), std::log(0.8 * 0.5 * 0.9), 1e-15);
}

TEST(Ctc, SequenceLongerThanFramesIsImpossible) {
  const Posteriorgram p = from_rows({{0.2, 0.4, 0.4}});
  EXPECT_EQ(forward_logprob(p, {1, 2}), kLogZero);
}

TEST(Ctc, EmptyPosteriorgram) {
  const Posteriorgram p(testing::letters_alphabet(3));
  EXPECT_EQ(forward_logprob(p, {}), 0.0);
  EXPECT_EQ(forward_logprob(p, {1}), kLogZero);
}

TEST(Ctc, InvalidLabelsAreRejected) {
  const Posteriorgram p = from_rows({{0.5, 0.5}});
  EXPECT_THROW(forward_logprob(p, {0}), Error);
  EXPECT_THROW(forward_logprob(p, {2}), Error);
  EXPECT_THROW(forward_logprob(p, {-1}), Error);
}

TEST(Ctc, MatchesEnumerationOnRandomInstances) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 60; ++trial) {
    const int t = 1 + trial % 5, k = 2 + trial % 3;
    const Posteriorgram p = testing::random_posteriorgram(rng, t, k, 0.7);
    for (const auto& [seq, prob] : testing::enumerate_sequences(p)) {
      EXPECT_NEAR(forward_logprob(p, seq), std::log(prob), 1e-9);
    }
  }
}

TEST(Ctc, ZeroProbabilityEntriesAreHandled) {
  const Posteriorgram p = from_rows({{1.0, 0.0, 0.0}, {0.0, 0.0, 1.0}, {1.0, 0.0, 0.0}});
  EXPECT_DOUBLE_EQ(forward_logprob(p, {2}), 0.0);
  EXPECT_EQ(forward_logprob(p, {1}), kLogZero);
  EXPECT_EQ(forward_logprob(p, {}), kLogZero);
}

TEST(Ctc, StreamingStateHasConstantSize) {
  std::mt19937_64 rng(102);
  const Posteriorgram p = testing::random_posteriorgram(rng, 50, 4);
  ForwardState s({1, 2, 3}, 4);
  for (std::size_t t = 0; t < p.num_frames(); ++t) {
    s.step(p.log_row(t));
    EXPECT_EQ(s.log_alpha().size(), 7u);
  }
  EXPECT_EQ(s.frames(), 50u);
  EXPECT_EQ(s.finalize(), forward_logprob(p, {1, 2, 3}));
  s.reset();
  EXPECT_EQ(s.frames(), 0u);
  EXPECT_EQ(s.finalize(), kLogZero);
}

TEST(Ctc, OpCounterIsExtendedLengthTimesFrames) {
  std::mt19937_64 rng(103);
  const Posteriorgram p = testing::random_posteriorgram(rng, 13, 4);
  CtcOpCounter c;
  forward_logprob(p, {1, 3}, &c);
  EXPECT_EQ(c.cells, 13u * 5u);
}

TEST(BeamSearch, ExhaustiveRankingWhenBeamIsWide) {
  std::mt19937_64 rng(104);
  for (int trial = 0; trial < 30; ++trial) {
    const Posteriorgram p = testing::random_posteriorgram(rng, 1 + trial % 4, 2 + trial % 2);
    const auto all = testing::enumerate_sequences(p);
    const NBestList got = beam_search(p, static_cast<int>(all.size()));
    ASSERT_EQ(got.size(), all.size());
    for (const auto& e : got) {
      ASSERT_TRUE(all.count(e.labels));
      EXPECT_NEAR(e.log_prob, std::log(all.at(e.labels)), 1e-9);
    }
    for (std::size_t i = 1; i < got.size(); ++i) EXPECT_GE(got[i - 1].log_prob, got[i].log_prob);
  }
}

TEST(BeamSearch, NarrowBeamReturnsAtMostBeamEntries) {
  std::mt19937_64 rng(105);
  const Posteriorgram p = testing::random_posteriorgram(rng, 8, 4);
  const NBestList got = beam_search(p, 3);
  EXPECT_LE(got.size(), 3u);
  for (const auto& e : got) EXPECT_EQ(e.log_prob, forward_logprob(p, e.labels));
  EXPECT_THROW(beam_search(p, 0), Error);
}

TEST(BeamSearch, TieBreakPrefersShorterThenLexicographic) {
  const NBestEntry a{{1, 2}, -1.0}, b{{1}, -1.0}, c{{2}, -1.0}, d{{3}, -0.5};
  EXPECT_TRUE(nbest_before(b, a));
  EXPECT_TRUE(nbest_before(b, c));
  EXPECT_TRUE(nbest_before(d, b));
  EXPECT_FALSE(nbest_before(b, b));
}

TEST(Greedy, MergesRepeatsAndDropsBlanks) {
  const Posteriorgram p = from_rows({{0.1, 0.8, 0.1},
                                     {0.1, 0.8, 0.1},
                                     {0.8, 0.1, 0.1},
                                     {0.1, 0.8, 0.1},
                                     {0.1, 0.1, 0.8},
                                     {0.9, 0.05, 0.05}});
  EXPECT_EQ(greedy_decode(p), (LabelSequence{1, 1, 2}));
}

}  // namespace
}  // namespace kws
