// SPDX-License-Identifier: Apache-2.0

#include "sdgan/errors.hpp"
#include "sdgan/fusion.hpp"

#include "generators.hpp"

#include <gtest/gtest.h>

namespace sdgan::fusion {
namespace {

using ag::Mat;

Mat standardize(const Mat& x) {
  Mat out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mu = x.row(r).mean();
    const double var = (x.row(r).array() - mu).square().mean();
    out.row(r) = (x.row(r).array() - mu) / std::sqrt(var + kLayerNormEps);
  }
  return out;
}

class FusionTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::mt19937_64 init(2);
    init_params(params, d, init);
  }
  int d = 8;
  ParamSet params;
  gen::Rng rng{5};
};

TEST_F(FusionTest, NoQueriesLeavesEmptySegment) {
  ag::Tape tape;
  Binder bind(tape, params, false);
  const auto out = fuse(bind, tape.constant(gen::normal(rng, 4, d)), tape.constant(gen::normal(rng, 4, d)),
                        tape.constant(Mat::Zero(0, d)));
  EXPECT_EQ(out.dynamic.rows(), 4);
  EXPECT_EQ(out.stat.rows(), 4);
  EXPECT_EQ(out.query.rows(), 0);
}

TEST_F(FusionTest, ZeroMlpClosedForm) {
  for (const char* name : {"fusion.mlp.w1", "fusion.mlp.b1", "fusion.mlp.w2", "fusion.mlp.b2"}) {
    params.set(name, Mat::Zero(params.at(name).rows(), params.at(name).cols()));
  }
  const Mat dyn = gen::normal(rng, 5, d);
  const Mat sta = gen::normal(rng, 5, d);
  const Mat qry = gen::normal(rng, 2, d);
  ag::Tape tape;
  Binder bind(tape, params, false);
  const auto out = fuse(bind, tape.constant(dyn), tape.constant(sta), tape.constant(qry));
  Mat stacked(12, d);
  stacked << dyn, sta, qry;
  const Mat expected = standardize(stacked + standardize(stacked));
  EXPECT_TRUE(out.dynamic.value().isApprox(expected.topRows(5), 1e-12));
  EXPECT_TRUE(out.stat.value().isApprox(expected.middleRows(5, 5), 1e-12));
  EXPECT_TRUE(out.query.value().isApprox(expected.bottomRows(2), 1e-12));
}

TEST_F(FusionTest, OutputRowsAreStandardizedBeforeAffine) {
  for (int trial = 0; trial < 20; ++trial) {
    ag::Tape tape;
    Binder bind(tape, params, false);
    const auto out = fuse(bind, tape.constant(gen::normal(rng, 6, d, 4.0)), tape.constant(gen::normal(rng, 6, d)),
                          tape.constant(gen::normal(rng, 3, d)));
    for (const Mat& seg : {out.dynamic.value(), out.stat.value(), out.query.value()}) {
      for (Eigen::Index r = 0; r < seg.rows(); ++r) {
        const double mu = seg.row(r).mean();
        EXPECT_LT(std::abs(mu), 1e-6);
        EXPECT_NEAR((seg.row(r).array() - mu).square().mean(), 1.0, 1e-5);
      }
    }
  }
}

TEST_F(FusionTest, PreNormVariantDiffers) {
  const Mat dyn = gen::normal(rng, 4, d);
  ag::Tape tape;
  Binder bind(tape, params, false);
  const auto a = fuse(bind, tape.constant(dyn), tape.constant(dyn), tape.constant(dyn.topRows(1)));
  const auto b = fuse(bind, tape.constant(dyn), tape.constant(dyn), tape.constant(dyn.topRows(1)), {false});
  EXPECT_FALSE(a.dynamic.value().isApprox(b.dynamic.value(), 1e-6));
}

TEST_F(FusionTest, RejectsShapeErrors) {
  ag::Tape tape;
  Binder bind(tape, params, false);
  EXPECT_THROW(fuse(bind, tape.constant(Mat::Zero(4, 0)), tape.constant(Mat::Zero(4, 0)), tape.constant(Mat::Zero(1, 0))),
               ValidationError);
  EXPECT_THROW(fuse(bind, tape.constant(Mat::Zero(4, d)), tape.constant(Mat::Zero(3, d)), tape.constant(Mat::Zero(1, d))),
               ValidationError);
  EXPECT_THROW(fuse(bind, tape.constant(Mat::Zero(4, d)), tape.constant(Mat::Zero(4, d)), tape.constant(Mat::Zero(1, d + 1))),
               ValidationError);
}

}  // namespace
}  // namespace sdgan::fusion
