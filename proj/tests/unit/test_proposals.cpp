// SPDX-License-Identifier: Apache-2.0

#include "sdgan/errors.hpp"
#include "sdgan/proposals.hpp"

#include "generators.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

namespace sdgan::proposals {
namespace {

using ag::Mat;

TEST(Cells, IndexingRoundTrip) {
  EXPECT_EQ(cell_index(4, 2, 3), 6);
  EXPECT_EQ(cell_span(4, 6), ClipSpan(2, 3));
  const auto cells = valid_cells(3);
  EXPECT_EQ(cells, (std::vector<int>{0, 1, 2, 4, 5, 8}));
  EXPECT_EQ(validity_mask(3, 2).sum(), 12.0);
}

TEST(AggregateCoarse, WindowOneIsIdentity) {
  gen::Rng rng(1);
  const Mat f = gen::normal(rng, 6, 3);
  ag::Tape tape;
  EXPECT_EQ(aggregate_coarse(tape.constant(f), 1).value(), f);
}

TEST(AggregateCoarse, DirectMax) {
  Mat f(4, 2);
  f << 1, 0, 3, 0, 0, 2, 0, 1;
  Mat expected(2, 2);
  expected << 3, 0, 0, 2;
  ag::Tape tape;
  EXPECT_EQ(aggregate_coarse(tape.constant(f), 2).value(), expected);
}

TEST(AggregateCoarse, MatchesLoopOracle) {
  gen::Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat f = gen::normal(rng, 12, 4);
    ag::Tape tape;
    EXPECT_EQ(aggregate_coarse(tape.constant(f), 3).value(), oracle::window_max(f, 3));
  }
}

TEST(AggregateCoarse, RejectsNonDividingWindow) {
  ag::Tape tape;
  EXPECT_THROW(aggregate_coarse(tape.constant(Mat::Ones(5, 2)), 2), ValidationError);
}

TEST(InitialMap, SingleClipIsTripled) {
  Mat f(1, 3);
  f << 1, -2, 0.5;
  ag::Tape tape;
  EXPECT_EQ(initial_map(tape.constant(f)).value(), 3.0 * f);
}

TEST(InitialMap, MatchesOracleAndZerosInvalidCells) {
  gen::Rng rng(3);
  for (int l = 1; l <= 8; ++l) {
    const Mat f = gen::normal(rng, l, 3);
    ag::Tape tape;
    const Mat m = initial_map(tape.constant(f)).value();
    EXPECT_LE((m - oracle::initial_map(f)).cwiseAbs().maxCoeff(), 1e-12);
    for (int j = 2; j <= l; ++j) EXPECT_EQ(m.row(cell_index(l, j, 1)).norm(), 0.0);
  }
}

TEST(ScoreMap, EqualVectorScoresOneOrthogonalZero) {
  Mat map = Mat::Zero(4, 2);
  map.row(0) << 2, 0;
  map.row(1) << 0, 3;
  map.row(3) << 1, 1;
  Mat q(2, 2);
  q << 2, 0, 0, 0;
  ag::Tape tape;
  const Mat s = score_map(tape.constant(map), tape.constant(q)).value();
  EXPECT_NEAR(s(0, 0), 1.0, 1e-15);
  EXPECT_EQ(s(1, 0), 0.0);
  EXPECT_EQ(s(2, 0), 0.0);
  EXPECT_EQ(s.col(1).norm(), 0.0);
}

TEST(ScoreMap, MatchesNormalizedDot) {
  gen::Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat f = gen::normal(rng, 4, 5);
    const Mat q = gen::normal(rng, 2, 5);
    ag::Tape tape;
    const Mat m = initial_map(tape.constant(f)).value();
    const Mat s = score_map(tape.constant(m), tape.constant(q)).value();
    EXPECT_LE((s - oracle::cosine_scores(m, q)).cwiseAbs().maxCoeff(), 1e-7);
  }
}

TEST(RefineMap, InvalidRowsStayZero) {
  gen::Rng rng(5);
  ParamSet params;
  std::mt19937_64 init(5);
  init_params(params, "map", 4, init);
  ag::Tape tape;
  Binder bind(tape, params, false);
  const Mat m = build_map(bind, tape.constant(gen::normal(rng, 5, 4)), "map").value();
  const Mat mask = validity_mask(5, 4);
  EXPECT_EQ(m.cwiseProduct(Mat::Ones(25, 4) - mask).norm(), 0.0);
}

ScoreMap single_query(int length, double fill) {
  ScoreMap s{length, Mat::Zero(length * length, 1)};
  for (int r : valid_cells(length)) s.scores(r, 0) = fill;
  return s;
}

TEST(RankProposals, TopOneIsArgmax) {
  gen::Rng rng(6);
  ScoreMap s = single_query(6, 0.0);
  for (int r : valid_cells(6)) s.scores(r, 0) = gen::real(rng, -1, 1);
  int best = valid_cells(6).front();
  for (int r : valid_cells(6)) best = s.scores(r, 0) > s.scores(best, 0) ? r : best;
  const auto ranked = rank_proposals(s, 0, 1, 0.5);
  ASSERT_EQ(ranked.size(), 1U);
  EXPECT_EQ(ranked[0].span, cell_span(6, best));
}

TEST(RankProposals, OverlapAboveThresholdSuppressed) {
  ScoreMap s = single_query(10, -1.0);
  s.scores(cell_index(10, 1, 10), 0) = 0.9;
  s.scores(cell_index(10, 1, 9), 0) = 0.8;
  s.scores(cell_index(10, 1, 1), 0) = 0.5;
  const auto ranked = rank_proposals(s, 0, 2, 0.5);
  ASSERT_EQ(ranked.size(), 2U);
  EXPECT_EQ(ranked[0].span, ClipSpan(1, 10));
  EXPECT_EQ(ranked[1].span, ClipSpan(1, 1));
}

TEST(RankProposals, FewSurvivorsGiveShortList) {
  const auto ranked = rank_proposals(single_query(1, 0.3), 0, 5, 0.5);
  EXPECT_EQ(ranked.size(), 1U);
}

TEST(RankProposals, TiesPreferEarlierThenShorter) {
  const auto ranked = rank_proposals(single_query(3, 0.2), 0, 6, 1.0);
  ASSERT_EQ(ranked.size(), 6U);
  EXPECT_EQ(ranked[0].span, ClipSpan(1, 1));
  EXPECT_EQ(ranked[1].span, ClipSpan(1, 2));
  EXPECT_EQ(ranked[3].span, ClipSpan(2, 2));
}

TEST(RankProposals, MatchesExhaustiveOracle) {
  gen::Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    ScoreMap s{6, Mat::Zero(36, 2)};
    for (int r : valid_cells(6)) s.scores.row(r) = gen::uniform(rng, 1, 2, -1, 1);
    for (int q = 0; q < 2; ++q) {
      const auto got = rank_proposals(s, q, 5, 0.5);
      const auto want = oracle::rank(s.scores, 6, q, 5, 0.5);
      ASSERT_EQ(got.size(), want.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_EQ(got[i].span, want[i].span);
        EXPECT_EQ(got[i].score, want[i].score);
      }
    }
  }
}

}  // namespace
}  // namespace sdgan::proposals
