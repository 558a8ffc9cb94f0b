// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "topocl/autodiff.h"
#include "topocl/rng.h"

using namespace topocl;
using namespace topocl::ad;

namespace {

Matrix randomMatrix(Rng& rng, Eigen::Index r, Eigen::Index c, double lo = -1.0, double hi = 1.0) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

// Weighted sum so every output coordinate reaches the scalar with a distinct coefficient.
Var probe(Tape&, Var y) {
  Rng    rng(static_cast<std::uint64_t>(y.rows() * 131 + y.cols()));
  Matrix w = randomMatrix(rng, y.rows(), y.cols());
  return sum(mulConstant(y, w));
}

void expectSmoothGrad(const TapeFunction& f, const std::vector<Matrix>& point, double tol = 1e-6) {
  const auto report = gradCheck(f, point, {1e-6, tol});
  EXPECT_TRUE(report.passed) << "max relative error " << report.maxRelativeError;
  EXPECT_TRUE(report.nonSmooth.empty());
  EXPECT_GT(report.checked, 0u);
}

}  // namespace

TEST(Autodiff, SumGradientIsOnes) {
  Tape   t;
  Rng    rng(1);
  Var    x = t.variable(randomMatrix(rng, 3, 4));
  t.backward(sum(x));
  EXPECT_EQ(t.grad(x), Matrix::Ones(3, 4));
}

TEST(Autodiff, ReluZeroGradientAtNegativeInputs) {
  Tape   t;
  Matrix m(1, 4);
  m << -2, -0.5, 0.5, 3;
  Var x = t.variable(m);
  t.backward(sum(relu(x)));
  Matrix expected(1, 4);
  expected << 0, 0, 1, 1;
  EXPECT_EQ(t.grad(x), expected);
}

TEST(Autodiff, MatmulMatchesFiniteDifferences) {
  Rng rng(2);
  expectSmoothGrad([](Tape& t, std::span<const Var> in) { return probe(t, matmul(in[0], in[1])); },
                   {randomMatrix(rng, 4, 5), randomMatrix(rng, 5, 3)});
}

TEST(Autodiff, EveryPrimitiveMatchesFiniteDifferences) {
  Rng          rng(3);
  const Matrix a = randomMatrix(rng, 3, 4), b = randomMatrix(rng, 3, 4);
  const Matrix row = randomMatrix(rng, 1, 4), col = randomMatrix(rng, 3, 1), s = randomMatrix(rng, 1, 1);
  const Matrix pos = randomMatrix(rng, 3, 4, 0.5, 2.0);
  // Entries bounded away from zero keep relu and max away from kinks.
  Matrix away = randomMatrix(rng, 3, 4, 0.2, 1.0);
  for (Eigen::Index i = 0; i < away.size(); i += 2) away.data()[i] *= -1;

  expectSmoothGrad([](Tape& t, std::span<const Var> in) { return probe(t, add(in[0], in[1])); }, {a, b});
  expectSmoothGrad([](Tape& t, std::span<const Var> in) { return probe(t, add(in[0], in[1])); }, {a, row});
  expectSmoothGrad([](Tape& t, std::span<const Var> in) { return probe(t, sub(in[0], in[1])); }, {a, col});
  expectSmoothGrad([](Tape& t, std::span<const Var> in) { return probe(t, mul(in[0], in[1])); }, {a, b});
  expectSmoothGrad([](Tape& t, std::span<const Var> in) { return probe(t, mul(in[0], in[1])); }, {a, s});
  expectSmoothGrad([](Tape& t, std::span<const Var> in) { return probe(t, mul(in[0], in[1])); }, {a, col});
  expectSmoothGrad([](Tape& t, std::span<const Var> in) { return probe(t, transpose(in[0])); }, {a});
  expectSmoothGrad([](Tape& t, std::span<const Var> in) { return probe(t, addScalar(scale(in[0], -2.5), 1.0)); }, {a});
  expectSmoothGrad([](Tape& t, std::span<const Var> in) { return probe(t, relu(in[0])); }, {away});
  expectSmoothGrad([](Tape& t, std::span<const Var> in) { return probe(t, exp(in[0])); }, {a});
  expectSmoothGrad([](Tape& t, std::span<const Var> in) { return probe(t, log(in[0])); }, {pos});
  expectSmoothGrad([](Tape&, std::span<const Var> in) { return mean(mul(in[0], in[0])); }, {a});
  expectSmoothGrad([](Tape& t, std::span<const Var> in) { return probe(t, sumAxis(in[0], 0)); }, {a});
  expectSmoothGrad([](Tape& t, std::span<const Var> in) { return probe(t, sumAxis(in[0], 1)); }, {a});
  expectSmoothGrad([](Tape& t, std::span<const Var> in) { return probe(t, maxAxis(in[0], 0)); }, {a});
  expectSmoothGrad([](Tape& t, std::span<const Var> in) { return probe(t, maxAxis(in[0], 1)); }, {a});
  expectSmoothGrad(
      [](Tape& t, std::span<const Var> in) {
        const Var parts[] = {in[0], in[1]};
        return probe(t, concat(parts, 0));
      },
      {a, row});
  expectSmoothGrad(
      [](Tape& t, std::span<const Var> in) {
        const Var parts[] = {in[0], in[1]};
        return probe(t, concat(parts, 1));
      },
      {a, col});
  expectSmoothGrad(
      [](Tape& t, std::span<const Var> in) {
        const int rows[] = {2, 0, 2, 1};
        return probe(t, gatherRows(in[0], rows));
      },
      {a});
  expectSmoothGrad(
      [](Tape& t, std::span<const Var> in) {
        const int rows[] = {1, 1, 0};
        return probe(t, scatterAddRows(in[0], rows, 2));
      },
      {a});
  expectSmoothGrad([](Tape& t, std::span<const Var> in) { return probe(t, l2NormalizeRows(in[0])); }, {a});
}

TEST(GradCheck, LinearFunctionIsExact) {
  Rng        rng(4);
  const auto report = gradCheck([](Tape& t, std::span<const Var> in) { return probe(t, scale(in[0], 3.0)); },
                                {randomMatrix(rng, 4, 4)}, {1e-6, 1e-6});
  EXPECT_TRUE(report.passed);
  EXPECT_LT(report.maxRelativeError, 1e-8);
}

TEST(GradCheck, SoftmaxCrossEntropy) {
  Rng        rng(5);
  const auto report = gradCheck(
      [](Tape&, std::span<const Var> in) {
        const Var logits = matmul(in[0], in[1]);
        const Var shifted = sub(logits, maxAxis(logits, 1));
        const Var lse     = log(sumAxis(exp(shifted), 1));
        Matrix    onehot  = Matrix::Zero(logits.rows(), logits.cols());
        for (Eigen::Index i = 0; i < onehot.rows(); ++i) onehot(i, i % onehot.cols()) = 1.0;
        const Var picked = sumAxis(mulConstant(shifted, onehot), 1);
        return mean(sub(lse, picked));
      },
      {randomMatrix(rng, 6, 4), randomMatrix(rng, 4, 3)}, {1e-6, 1e-6});
  EXPECT_TRUE(report.passed) << report.maxRelativeError;
}

TEST(GradCheck, ReluKinkIsFlagged) {
  Matrix x(1, 3);
  x << 0.0, 0.7, -0.4;
  const auto report = gradCheck([](Tape&, std::span<const Var> in) { return sum(relu(in[0])); }, {x});
  ASSERT_EQ(report.nonSmooth.size(), 1u);
  EXPECT_EQ(report.nonSmooth[0].col, 0);
  EXPECT_EQ(report.checked, 2u);
  EXPECT_TRUE(report.passed);
}

TEST(Autodiff, BackwardIsDeterministicAndResetClears) {
  Rng          rng(6);
  const Matrix a = randomMatrix(rng, 5, 5), b = randomMatrix(rng, 5, 2);
  auto         run = [&](Tape& t) {
    Var x = t.variable(a), y = t.variable(b);
    t.backward(sum(exp(scale(matmul(l2NormalizeRows(x), y), 0.5))));
    return std::pair{t.grad(x), t.grad(y)};
  };
  Tape       t1, t2;
  const auto g1 = run(t1);
  const auto g2 = run(t2);
  EXPECT_EQ(g1.first, g2.first);
  EXPECT_EQ(g1.second, g2.second);
  t1.reset();
  EXPECT_EQ(t1.size(), 0u);
  const auto g3 = run(t1);
  EXPECT_EQ(g3.first, g1.first);
}

TEST(Autodiff, ShapeMismatchNamesPrimitive) {
  Tape t;
  Var  a = t.constant(Matrix::Zero(2, 3));
  Var  b = t.constant(Matrix::Zero(2, 3));
  try {
    matmul(a, b);
    FAIL();
  } catch (const ShapeMismatch& e) {
    EXPECT_NE(std::string(e.what()).find("matmul"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("2x3"), std::string::npos);
  }
  EXPECT_THROW(add(a, t.constant(Matrix::Zero(3, 2))), ShapeMismatch);
  EXPECT_THROW(l2NormalizeRows(a), ZeroNorm);
}
