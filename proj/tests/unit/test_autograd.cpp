// SPDX-License-Identifier: Apache-2.0

#include "sdgan/autograd.hpp"
#include "sdgan/params.hpp"

#include "generators.hpp"
#include "gradcheck.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace sdgan::ag {
namespace {

TEST(Tape, SquareSumGradient) {
  Tape tape;
  Mat x(2, 2);
  x << 1, -2, 3, 0.5;
  Var v = tape.leaf(x);
  tape.backward(sum(hadamard(v, v)));
  EXPECT_TRUE(tape.grad(v).isApprox(2.0 * x));
}

TEST(Tape, ConstantsCollectNoGradient) {
  Tape tape;
  Var c = tape.constant(Mat::Ones(2, 2));
  Var x = tape.leaf(Mat::Ones(2, 2));
  tape.backward(sum(matmul(c, x)));
  EXPECT_EQ(tape.grad(c), Mat::Zero(2, 2));
  EXPECT_EQ(tape.grad(x), Mat::Constant(2, 2, 2.0));
}

TEST(Tape, BackwardNeedsScalarRoot) {
  Tape tape;
  Var x = tape.leaf(Mat::Ones(2, 2));
  EXPECT_ANY_THROW(tape.backward(x));
}

TEST(Pointwise, Values) {
  Tape tape;
  Mat x(1, 3);
  x << -1.0, 0.0, 1.0;
  Var v = tape.constant(x);
  EXPECT_NEAR(gelu(v).value()(0, 2), 0.8413447460685429, 1e-15);
  EXPECT_NEAR(gelu(v).value()(0, 0), -0.15865525393145707, 1e-15);
  EXPECT_NEAR(softplus(v).value()(0, 1), std::log(2.0), 1e-15);
  EXPECT_EQ(relu(v).value()(0, 0), 0.0);
}

TEST(Pointwise, SoftplusDoesNotOverflow) {
  Tape tape;
  Mat x(1, 2);
  x << 800.0, -800.0;
  Var v = tape.leaf(x);
  Var s = softplus(v);
  EXPECT_DOUBLE_EQ(s.value()(0, 0), 800.0);
  EXPECT_GE(s.value()(0, 1), 0.0);
  tape.backward(sum(s));
  EXPECT_TRUE(tape.grad(v).allFinite());
}

TEST(Reductions, LogSumExpIsStable) {
  Tape tape;
  Mat x(1, 2);
  x << 1000.0, 1000.0;
  Var v = tape.constant(x);
  EXPECT_NEAR(logsumexp_rows(v).scalar(), 1000.0 + std::log(2.0), 1e-9);
  EXPECT_NEAR(logsumexp_cols(tape.constant(x.transpose())).scalar(), 1000.0 + std::log(2.0), 1e-9);
}

TEST(Structured, LayerNormStandardizesRows) {
  gen::Rng rng(3);
  Tape tape;
  const Mat y = layer_norm_rows(tape.constant(gen::normal(rng, 5, 16, 3.0)), 1e-5).value();
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    EXPECT_NEAR(y.row(r).mean(), 0.0, 1e-12);
    EXPECT_NEAR((y.row(r).array() - y.row(r).mean()).square().mean(), 1.0, 1e-5);
  }
}

TEST(Structured, L2NormalizeKeepsZeroRows) {
  Tape tape;
  Mat x(2, 2);
  x << 3, 4, 0, 0;
  Var v = tape.leaf(x);
  Var y = l2_normalize_rows(v);
  EXPECT_NEAR(y.value()(0, 1), 0.8, 1e-15);
  EXPECT_EQ(y.value().row(1), Mat::Zero(1, 2));
  tape.backward(sum(y));
  EXPECT_TRUE(tape.grad(v).allFinite());
}

TEST(Structured, EmaClosedForm) {
  Tape tape;
  Mat x(3, 1);
  x << 1, 0, 2;
  const Mat y = ema_rows(tape.constant(x), 0.5).value();
  EXPECT_DOUBLE_EQ(y(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(y(1, 0), 0.25);
  EXPECT_DOUBLE_EQ(y(2, 0), 1.125);
}

TEST(Structured, Im2colZeroPads) {
  Tape tape;
  Mat x(3, 1);
  x << 1, 2, 3;
  const Mat p = im2col_1d(tape.constant(x), 3).value();
  Mat expected(3, 3);
  expected << 0, 1, 2, 1, 2, 3, 2, 3, 0;
  EXPECT_EQ(p, expected);
}

TEST(Structured, WindowMaxRoutesGradientToArgmax) {
  Tape tape;
  Mat x(4, 1);
  x << 1, 3, 2, 0;
  Var v = tape.leaf(x);
  Var y = window_max_rows(v, 2);
  EXPECT_EQ(y.value()(0, 0), 3.0);
  EXPECT_EQ(y.value()(1, 0), 2.0);
  tape.backward(sum(y));
  Mat g(4, 1);
  g << 0, 1, 1, 0;
  EXPECT_EQ(tape.grad(v), g);
}

TEST(Indexing, PickGatherConcatSlice) {
  Tape tape;
  Mat x(3, 2);
  x << 1, 2, 3, 4, 5, 6;
  Var v = tape.leaf(x);
  EXPECT_EQ(pick(v, {{2, 1}, {0, 0}}).value(), (Mat(2, 1) << 6, 1).finished());
  EXPECT_EQ(gather_rows(v, {2, 2}).value().row(1), x.row(2));
  EXPECT_EQ(concat_rows({v, v}).value().rows(), 6);
  EXPECT_EQ(slice_rows(v, 1, 2).value(), x.bottomRows(2));
}

TEST(Matmul, RowPermutationIsBitExact) {
  gen::Rng rng(5);
  const Mat a = gen::normal(rng, 7, 33);
  const Mat b = gen::normal(rng, 33, 19);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(7);
  perm.setIdentity();
  std::shuffle(perm.indices().data(), perm.indices().data() + 7, rng);
  Tape tape;
  const Mat direct = matmul(tape.constant(a), tape.constant(b)).value();
  const Mat permuted = matmul(tape.constant(perm * a), tape.constant(b)).value();
  EXPECT_EQ(perm * direct, permuted);
  EXPECT_TRUE(direct.isApprox(a * b, 1e-12));
}

TEST(FiniteDifference, EveryOpAgrees) {
  gen::Rng rng(21);
  ParamSet blocks;
  blocks.set("a", gen::normal(rng, 4, 6));
  blocks.set("b", gen::normal(rng, 6, 4));
  blocks.set("row", gen::normal(rng, 1, 6));
  blocks.set("p", gen::uniform(rng, 4, 6, 0.5, 2.0));
  const std::vector<std::pair<std::string, std::function<Var(Binder&)>>> ops = {
      {"matmul", [](Binder& b) { return matmul(b("a"), b("b")); }},
      {"matmul_nt", [](Binder& b) { return matmul_nt(b("a"), b("a")); }},
      {"add_row", [](Binder& b) { return add_row(b("a"), b("row")); }},
      {"mul_row", [](Binder& b) { return mul_row(b("a"), b("row")); }},
      {"gelu", [](Binder& b) { return gelu(b("a")); }},
      {"tanh", [](Binder& b) { return tanh(b("a")); }},
      {"softplus", [](Binder& b) { return softplus(b("a")); }},
      {"log", [](Binder& b) { return log(b("p")); }},
      {"logsumexp_rows", [](Binder& b) { return logsumexp_rows(b("a")); }},
      {"logsumexp_cols", [](Binder& b) { return logsumexp_cols(b("a")); }},
      {"layer_norm", [](Binder& b) { return layer_norm_rows(b("a"), 1e-5); }},
      {"l2_normalize", [](Binder& b) { return l2_normalize_rows(b("a")); }},
      {"ema", [](Binder& b) { return ema_rows(b("a"), 0.5); }},
      {"im2col", [](Binder& b) { return im2col_1d(b("a"), 3); }},
      {"hadamard", [](Binder& b) { return hadamard(b("a"), b("p")); }},
  };
  for (const auto& [name, op] : ops) {
    Tape probe;
    Binder probe_bind(probe, blocks, false);
    const Var shape = op(probe_bind);
    const Mat weights = gen::normal(rng, shape.rows(), shape.cols());
    const auto objective = [&, op = op](Binder& b) { return gradcheck::project(op(b), weights); };
    for (const auto& r : gradcheck::check(blocks, objective, rng)) {
      EXPECT_LT(r.rel_error, gradcheck::kTolerance) << name << " / " << r.name;
    }
  }
}

}  // namespace
}  // namespace sdgan::ag
