// SPDX-License-Identifier: Apache-2.0

#include "sdgan/dsgn.hpp"
#include "sdgan/errors.hpp"

#include "generators.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace sdgan::dsgn {
namespace {

using ag::Mat;

std::vector<std::pair<int, int>> pairs(const TemporalGraph& g) {
  std::vector<std::pair<int, int>> out;
  for (const auto& e : g.edges) out.emplace_back(e.src, e.dst);
  return out;
}

TEST(BuildGraph, BudgetAboveCandidatesKeepsAll) {
  gen::Rng rng(1);
  auto p = pairs(build_graph(gen::normal(rng, 3, 4), 3, 1.0));
  std::sort(p.begin(), p.end());
  EXPECT_EQ(p, (std::vector<std::pair<int, int>>{{1, 2}, {1, 3}, {2, 3}}));
}

TEST(BuildGraph, UniqueMaximumWins) {
  Mat f(3, 2);
  f << 1, 0, 1, 0, 0, 1;
  const auto g = build_graph(f, 1, 1.0);
  ASSERT_EQ(g.edges.size(), 1U);
  EXPECT_EQ(g.edges[0].src, 1);
  EXPECT_EQ(g.edges[0].dst, 2);
  EXPECT_DOUBLE_EQ(g.edges[0].cosine, 1.0);
}

TEST(BuildGraph, TiesPreferShortDistanceThenEarlySource) {
  const Mat f = Mat::Ones(4, 2);
  const auto p = pairs(build_graph(f, 4, 1.0));
  EXPECT_EQ(p, (std::vector<std::pair<int, int>>{{1, 2}, {2, 3}, {3, 4}, {1, 3}}));
}

TEST(BuildGraph, ZeroNodeHasZeroCosine) {
  Mat f(3, 2);
  f << 1, 0, 0, 0, -1, 0;
  for (const auto& e : build_graph(f, 3, 1.0).edges) {
    if (e.src == 2 || e.dst == 2) EXPECT_EQ(e.cosine, 0.0);
  }
  EXPECT_EQ(cosine(Eigen::RowVectorXd::Zero(3), Eigen::RowVectorXd::Ones(3)), 0.0);
}

TEST(BuildGraph, MatchesExhaustiveSort) {
  gen::Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const Mat f = gen::normal(rng, 8, 5);
    const auto got = build_graph(f, 10, 1.0).edges;
    const auto want = oracle::top_edges(f, 10, 1.0);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].src, want[i].src);
      EXPECT_EQ(got[i].dst, want[i].dst);
      EXPECT_NEAR(got[i].weight, want[i].weight, 1e-15);
    }
  }
}

TEST(BuildGraph, RejectsBadArguments) {
  EXPECT_THROW(build_graph(Mat::Ones(1, 2), 1, 1.0), ValidationError);
  EXPECT_THROW(build_graph(Mat::Ones(3, 2), 0, 1.0), ValidationError);
  EXPECT_THROW(build_graph(Mat::Ones(3, 2), 1, 0.0), ValidationError);
}

TEST(Rbf, Values) {
  EXPECT_EQ(rbf(0, 2.0), 1.0);
  EXPECT_NEAR(rbf(2, 2.0), std::exp(-0.5), 1e-15);
  EXPECT_EQ(resolved_sigma(GraphOptions{}, 16), 2.0);
  EXPECT_EQ(resolved_sigma(GraphOptions{60, 2, 3.5, true}, 16), 3.5);
}

TEST(GraphForward, NoLayersIsIdentity) {
  gen::Rng rng(2);
  const Mat f = gen::normal(rng, 5, 3);
  ag::Tape tape;
  EXPECT_EQ(graph_forward(tape.constant(f), {60, 0, 0.0, true}).value(), f);
}

TEST(GraphForward, SingleEdgeClosedForm) {
  Mat f(2, 3);
  f << 1, 2, 0, 0.5, 0, 3;
  const double w = rbf(1, 0.7);
  const std::vector<TemporalGraph> frozen{{2, 0.7, {{1, 2, 1.0, w}}}};
  ag::Tape tape;
  const Mat out = graph_forward(tape.constant(f), {1, 1, 0.7, true}, &frozen).value();
  EXPECT_EQ(out.row(0), f.row(0));
  EXPECT_EQ(out.row(1), f.row(1) + w * f.row(0));
}

TEST(GraphForward, IsolatedNodeKeepsSelfTerm) {
  Mat f(3, 1);
  f << 1, 2, 3;
  const std::vector<TemporalGraph> frozen{{3, 1.0, {{1, 2, 1.0, 0.5}}}};
  ag::Tape tape;
  const Mat out = graph_forward(tape.constant(f), {1, 1, 1.0, true}, &frozen).value();
  EXPECT_EQ(out(2, 0), 3.0);
}

TEST(GraphForward, MatchesDenseOracle) {
  gen::Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const Mat f = gen::normal(rng, 6, 4);
    ag::Tape tape;
    std::vector<TemporalGraph> used;
    const Mat got = graph_forward(tape.constant(f), {5, 2, 0.0, true}, nullptr, &used).value();
    EXPECT_EQ(used.size(), 2U);
    EXPECT_LE((got - oracle::graph_forward(f, 5, 2, 6 / 8.0)).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Qccl, ZeroDiscriminatorIsTwoLogTwo) {
  gen::Rng rng(3);
  ag::Tape tape;
  const auto loss = qccl_loss(tape.constant(gen::normal(rng, 2, 4)), tape.constant(gen::normal(rng, 6, 4)),
                              tape.constant(Mat::Zero(4, 4)), {{2, 3}, {1, 5}});
  EXPECT_NEAR(loss.scalar(), 2.0 * std::log(2.0), 1e-15);
}

TEST(Qccl, SaturatedDiscriminator) {
  Mat clips(2, 1);
  clips << 1, -1;
  ag::Tape tape;
  const auto loss =
      qccl_loss(tape.constant(Mat::Ones(1, 1)), tape.constant(clips), tape.constant(Mat::Constant(1, 1, 10.0)), {{1, 1}});
  EXPECT_NEAR(loss.scalar(), 2.0 * std::log1p(std::exp(-10.0)), 1e-15);
  EXPECT_NEAR(loss.scalar(), 9.08e-5, 1e-7);
}

TEST(Qccl, FullVideoSpanHasNoNegativeTerm) {
  Mat clips(2, 1);
  clips << 1, 1;
  ag::Tape tape;
  const auto loss =
      qccl_loss(tape.constant(Mat::Ones(1, 1)), tape.constant(clips), tape.constant(Mat::Constant(1, 1, 3.0)), {{1, 2}});
  EXPECT_NEAR(loss.scalar(), std::log1p(std::exp(-3.0)), 1e-15);
}

TEST(Qccl, MatchesExpandedSum) {
  gen::Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Mat q = gen::normal(rng, 2, 3);
    const Mat clips = gen::normal(rng, 4, 3);
    const Mat w = gen::normal(rng, 3, 3);
    const std::vector<ClipSpan> pos{gen::span(rng, 4), gen::span(rng, 4)};
    for (const bool mean : {true, false}) {
      ag::Tape tape;
      const double got = qccl_loss(tape.constant(q), tape.constant(clips), tape.constant(w), pos,
                                   mean ? Expectation::kMean : Expectation::kSum)
                             .scalar();
      EXPECT_NEAR(got, oracle::qccl(q, clips, w, pos, mean), 1e-8);
    }
  }
}

}  // namespace
}  // namespace sdgan::dsgn
