// SPDX-License-Identifier: Apache-2.0

#include "sdgan/errors.hpp"
#include "sdgan/losses.hpp"

#include "generators.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace sdgan::losses {
namespace {

using ag::Mat;

TEST(Pna, OrthogonalRowsClosedForm) {
  const Mat f = Mat::Identity(4, 4);
  ag::Tape tape;
  const double got = pna_loss(tape.constant(f), tape.constant(f), 1.0).scalar();
  EXPECT_NEAR(got, -std::log(std::exp(1.0) / (std::exp(1.0) + 3.0)), 1e-15);
  EXPECT_NEAR(got, 0.7437, 5e-5);
}

TEST(Pna, RankOneIsLogT) {
  const Mat f = Mat::Ones(5, 3);
  ag::Tape tape;
  EXPECT_NEAR(pna_loss(tape.constant(f), tape.constant(2.0 * f), 0.1).scalar(), std::log(5.0), 1e-12);
}

TEST(Pna, SingleNodeIsZero) {
  gen::Rng rng(1);
  ag::Tape tape;
  EXPECT_EQ(pna_loss(tape.constant(gen::normal(rng, 1, 3)), tape.constant(gen::normal(rng, 1, 3)), 0.1).scalar(), 0.0);
}

TEST(Pna, MatchesSoftmaxOracle) {
  gen::Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const Mat a = gen::normal(rng, 5, 4);
    const Mat b = gen::normal(rng, 5, 4);
    ag::Tape tape;
    EXPECT_NEAR(pna_loss(tape.constant(a), tape.constant(b), 0.1).scalar(), oracle::pna(a, b, 0.1), 1e-8);
  }
}

TEST(IouLoss, MatchedHalfTargetsGiveLogTwo) {
  ag::Tape tape;
  EXPECT_NEAR(iou_loss(tape.constant(Mat::Zero(3, 2)), Mat::Constant(3, 2, 0.5)).scalar(), std::log(2.0), 1e-12);
}

TEST(IouLoss, SaturatedFitNearZero) {
  Mat targets(1, 2);
  targets << kProbEps, 1.0 - kProbEps;
  const Mat scores = 2.0 * targets.array() - 1.0;
  ag::Tape tape;
  EXPECT_LT(iou_loss(tape.constant(scores), targets).scalar(), 1e-4);
}

TEST(IouLoss, MatchesDirectSum) {
  gen::Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Mat s = gen::uniform(rng, 10, 1, -1, 1);
    const Mat t = gen::uniform(rng, 10, 1, 0, 1);
    ag::Tape tape;
    EXPECT_NEAR(iou_loss(tape.constant(s), t).scalar(), oracle::iou_bce(s, t), 1e-8);
  }
}

TEST(IouLoss, RejectsTargetsOutsideUnitInterval) {
  ag::Tape tape;
  EXPECT_THROW(iou_loss(tape.constant(Mat::Zero(1, 1)), Mat::Constant(1, 1, 1.5)), ValidationError);
}

TEST(IouTargets, ValuesAndRescale) {
  const Mat t = iou_targets(2, {{1, 1}});
  Mat expected(3, 1);
  expected << 1.0, 0.5, 0.0;
  EXPECT_EQ(t, expected);
  const Mat r = iou_targets(2, {{1, 1}}, IoURescale{0.5, 1.0});
  EXPECT_EQ(r(1, 0), 0.0);
  EXPECT_EQ(r(0, 0), 1.0);
}

TEST(Contra, SingleCellSingleQueryIsZero) {
  ag::Tape tape;
  EXPECT_EQ(contra_loss(tape.constant(Mat::Constant(1, 1, 0.3)), {0}, 1.0).scalar(), 0.0);
}

TEST(Contra, UniformScores) {
  ag::Tape tape;
  const double got = contra_loss(tape.constant(Mat::Constant(3, 2, 0.4)), {0, 2}, 1.0).scalar();
  EXPECT_NEAR(got, 2.0 * std::log(3.0) + 2.0 * std::log(2.0), 1e-12);
}

TEST(Contra, SingleQueryShiftInvariant) {
  gen::Rng rng(4);
  const Mat s = gen::uniform(rng, 10, 1, -1, 1);
  ag::Tape tape;
  const double a = contra_loss(tape.constant(s), {3}, 0.5).scalar();
  const double b = contra_loss(tape.constant(s.array() + 0.7), {3}, 0.5).scalar();
  EXPECT_NEAR(a, b, 1e-8);
}

TEST(Contra, MatchesExpandedOracle) {
  gen::Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Mat s = gen::uniform(rng, 10, 3, -1, 1);
    const std::vector<int> rows{gen::integer(rng, 0, 9), gen::integer(rng, 0, 9), gen::integer(rng, 0, 9)};
    ag::Tape tape;
    const double got = contra_loss(tape.constant(s), rows, 1.0).scalar();
    EXPECT_NEAR(got, oracle::contra(s, rows, 1.0), 1e-8 * std::max(1.0, std::abs(got)));
  }
}

struct Components {
  ag::Tape tape;
  LossTerms terms;
  std::vector<double> values;

  explicit Components(gen::Rng& rng) {
    for (auto* slot : {&terms.query_clip, &terms.pna_coarse, &terms.pna_fine, &terms.iou_dyn, &terms.iou_sta,
                       &terms.contra_dyn, &terms.contra_sta}) {
      const double v = gen::real(rng, 0.1, 3.0);
      *slot = tape.leaf(Mat::Constant(1, 1, v));
      values.push_back(v);
    }
  }
};

TEST(TotalLoss, AllWeightsZero) {
  gen::Rng rng(6);
  Components c(rng);
  const LossWeights w{0, 0, 0, 0, 0, 0.1, 1.0};
  EXPECT_EQ(total_loss(c.tape, c.terms, w).scalar(), 0.0);
}

TEST(TotalLoss, DynamicOnlySelectsDynamicTerms) {
  gen::Rng rng(7);
  Components c(rng);
  const LossWeights w{0, 0, 0, 1, 0, 0.1, 1.0};
  EXPECT_EQ(total_loss(c.tape, c.terms, w).scalar(), c.values[3] + c.values[5]);
}

TEST(TotalLoss, DefaultsRecompose) {
  gen::Rng rng(8);
  Components c(rng);
  const LossWeights w;
  const auto& v = c.values;
  const double expected =
      w.query_clip * v[0] + w.pna_coarse * v[1] + w.pna_fine * v[2] + w.dynamic * (v[3] + v[5]) + w.stat * (v[4] + v[6]);
  const auto total = total_loss(c.tape, c.terms, w);
  EXPECT_NEAR(total.scalar(), expected, 1e-12);
  const auto b = breakdown(c.terms, total);
  EXPECT_EQ(b.iou_sta, v[4]);
  EXPECT_EQ(b.total, total.scalar());
}

TEST(TotalLoss, AbsentTermsSkipped) {
  ag::Tape tape;
  LossTerms terms;
  terms.iou_dyn = tape.leaf(Mat::Constant(1, 1, 2.0));
  EXPECT_NEAR(total_loss(tape, terms, LossWeights{}).scalar(), 1.2, 1e-15);
}

TEST(LossWeights, Validation) {
  EXPECT_THROW((LossWeights{-1, 1, 0, 0.6, 0.4, 0.1, 1.0}).validate(), ValidationError);
  EXPECT_THROW((LossWeights{1, 1, 0, 0.6, 0.4, 0.0, 1.0}).validate(), ValidationError);
  EXPECT_NO_THROW(LossWeights{}.validate());
}

TEST(Breakdown, CsvHeaderAndArithmetic) {
  EXPECT_STREQ(kBreakdownHeader,
               "epoch,branch,L_QCCL,L_PNA_coarse,L_PNA_fine,L_IoU_dyn,L_IoU_sta,L_Contra_dyn,L_Contra_sta,total");
  LossBreakdown a;
  a.total = 2.0;
  a += a;
  a /= 4.0;
  EXPECT_EQ(a.total, 1.0);
  EXPECT_EQ(to_string(Branch::kCoarse), "coarse");
}

}  // namespace
}  // namespace sdgan::losses
