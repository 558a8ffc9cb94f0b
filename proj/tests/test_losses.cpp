// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "topocl/losses.h"
#include "topocl/rng.h"

using namespace topocl;

namespace {

Matrix normalMatrix(Rng& rng, Eigen::Index r, Eigen::Index c) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

// Seed-42 fixture generated by tests/oracles/tdl_fixture_ref.py.
Matrix fixtureZ() {
  Matrix z(3, 4);
  z << 0.30471707975443135, -1.0399841062404955, 0.7504511958064572, 0.9405647163912139,  //
      -1.9510351886538364, -1.302179506862318, 0.12784040316728537, -0.3162425923435822,  //
      -0.016801157504288795, -0.85304392757358, 0.8793979748628286, 0.7777919354289483;
  return z;
}

Matrix fixtureI() {
  Matrix f(3, 5);
  f << 0.06603069756121605, 1.1272412069680329, 0.4675093422520456, -0.8592924628832382, 0.36875078408249884,  //
      -0.9588826008289989, 0.8784503013072725, -0.049925910986252896, -0.18486236354526056, -0.6809295444039414,  //
      1.2225413386740303, -0.15452948206880215, -0.4283278221631072, -0.3521335504882296, 0.5323091855533487;
  return f;
}

// Long-double dot-product L_n evaluated straight from the definition.
long double dotTdlAnchor(const Matrix& z, const Matrix& d, long double tau, int n) {
  const auto count = static_cast<int>(z.rows());
  auto       dot   = [&](int a, int b) {
    long double acc = 0.0L;
    for (Eigen::Index c = 0; c < z.cols(); ++c) acc += static_cast<long double>(z(a, c)) * z(b, c);
    return acc / tau;
  };
  long double total = 0.0L;
  for (int m = 0; m < count; ++m) {
    if (m == n) continue;
    long double den = 0.0L;
    for (int k = 0; k < count; ++k)
      if (k != n && d(n, k) >= d(n, m)) den += std::exp(dot(n, k));
    total += std::log(den) - dot(n, m);
  }
  return total / (count - 1);
}

// Five-point central difference of dotTdlAnchor along z(row, col).
double centralDifference(const Matrix& z, const Matrix& d, double tau, int n, int row, int col, double h) {
  auto at = [&](double offset) {
    Matrix zz = z;
    zz(row, col) += offset;
    return dotTdlAnchor(zz, d, tau, n);
  };
  return static_cast<double>((-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12.0L * h));
}

constexpr double kFixtureTdl = 1.6512914883548008441;

double relativeError(double a, double n, double scale) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-3 * scale + 1e-12});
}

}  // namespace

TEST(Tdl, FixtureMatchesHighPrecisionEvaluator) {
  EXPECT_NEAR(tdlLoss(fixtureZ(), fixtureI(), 0.1), kFixtureTdl, 1e-12);
  ad::Tape t;
  const ad::Var z = t.variable(fixtureZ());
  EXPECT_NEAR(tdlLoss(t, z, pairwiseDistances(fixtureI()), 0.1).scalar(), kFixtureTdl, 1e-12);
}

TEST(Tdl, TwoSamplesGiveExactlyZero) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix z = normalMatrix(rng, 2, 5);
    const Matrix f = normalMatrix(rng, 2, 7);
    EXPECT_EQ(tdlLoss(z, f, 0.1), 0.0);
    ad::Tape t;
    EXPECT_NEAR(tdlLoss(t, t.variable(z), pairwiseDistances(f), 0.1).scalar(), 0.0, 1e-15);
  }
}

TEST(Tdl, IdenticalFingerprintsUseTheFullDenominator) {
  Rng          rng(4);
  const Matrix z   = normalMatrix(rng, 5, 3);
  const Matrix f   = Matrix::Constant(5, 4, 0.25);
  const double tau = 0.5;
  // Every indicator is 1: L_n = 1/(N-1) sum_{m != n} [log sum_{k != n} e^{s_nk} - s_nm].
  const Vector norms = z.rowwise().norm();
  double       expected = 0.0;
  for (int n = 0; n < 5; ++n) {
    double den = 0.0;
    for (int k = 0; k < 5; ++k)
      if (k != n) den += std::exp(z.row(n).dot(z.row(k)) / (norms(n) * norms(k) * tau));
    double acc = 0.0;
    for (int m = 0; m < 5; ++m)
      if (m != n) acc += std::log(den) - z.row(n).dot(z.row(m)) / (norms(n) * norms(m) * tau);
    expected += acc / 4.0;
  }
  EXPECT_NEAR(tdlLoss(z, f, tau), expected / 5.0, 1e-12);
}

TEST(Tdl, Errors) {
  EXPECT_THROW(tdlLoss(Matrix::Ones(1, 3), Matrix::Ones(1, 2), 0.1), BatchTooSmall);
  Matrix z = Matrix::Ones(3, 2);
  z.row(1).setZero();
  EXPECT_THROW(tdlLoss(z, Matrix::Ones(3, 2), 0.1), ZeroNormEmbedding);
  ad::Tape t;
  EXPECT_THROW(tdlLoss(t, t.variable(z), Matrix::Zero(3, 3), 0.1), ZeroNormEmbedding);
  EXPECT_THROW(tdlLoss(Matrix::Ones(3, 2), Matrix::Ones(2, 2), 0.1), LengthMismatch);
}

TEST(Tdl, NonnegativeOnFuzzBatches) {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const int    n   = 2 + static_cast<int>(rng.uniformInt(10));
    const Matrix z   = normalMatrix(rng, n, 1 + static_cast<int>(rng.uniformInt(6)));
    Matrix       f   = normalMatrix(rng, n, 3);
    if (trial % 3 == 0) f.row(n - 1) = f.row(0);  // ties
    const double tau = rng.uniform(0.05, 2.0);
    for (double v : tdlPerSample(z, pairwiseDistances(f), tau)) EXPECT_GE(v, 0.0);
  }
}

TEST(Tdl, RankInvarianceIsBitExact) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const int    n = 3 + static_cast<int>(rng.uniformInt(8));
    const Matrix z = normalMatrix(rng, n, 4);
    const Matrix d = pairwiseDistances(normalMatrix(rng, n, 5));
    Matrix       t = d;
    // A different strictly increasing map per anchor row.
    for (int a = 0; a < n; ++a) {
      const double scale = rng.uniform(0.1, 10.0);
      for (int k = 0; k < n; ++k) t(a, k) = std::exp(scale * d(a, k)) + d(a, k) * d(a, k) * d(a, k);
    }
    EXPECT_EQ(tdlLossFromDistances(z, d, 0.1), tdlLossFromDistances(z, t, 0.1));
  }
}

TEST(Tdl, PermutationEquivariance) {
  Rng          rng(7);
  const int    n = 7;
  const Matrix z = normalMatrix(rng, n, 4);
  const Matrix f = normalMatrix(rng, n, 6);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(std::span<int>(perm));
  Matrix zp(n, 4), fp(n, 6);
  for (int i = 0; i < n; ++i) {
    zp.row(i) = z.row(perm[static_cast<std::size_t>(i)]);
    fp.row(i) = f.row(perm[static_cast<std::size_t>(i)]);
  }
  const auto base = tdlPerSample(z, pairwiseDistances(f), 0.1);
  const auto perm_ = tdlPerSample(zp, pairwiseDistances(fp), 0.1);
  for (int i = 0; i < n; ++i) EXPECT_NEAR(perm_[static_cast<std::size_t>(i)], base[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])], 1e-13);
}

TEST(Tdl, AutodiffGradientMatchesFiniteDifferences) {
  Rng        rng(8);
  const auto d = pairwiseDistances(normalMatrix(rng, 6, 4));
  const auto report = ad::gradCheck([&](ad::Tape& t, std::span<const ad::Var> in) { return tdlLoss(t, in[0], d, 0.2); },
                                    {normalMatrix(rng, 6, 3)}, {1e-6, 1e-5});
  EXPECT_TRUE(report.passed) << report.maxRelativeError;
}

TEST(TdlGradient, AnalyticMatchesFiniteDifferences) {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const int    n   = 6;
    const Matrix z   = normalMatrix(rng, n, 4);
    const Matrix d   = pairwiseDistances(normalMatrix(rng, n, 3));
    const double tau = 0.5;
    for (int a = 0; a < n; ++a) {
      const auto order = distanceOrder(d, a);
      for (int i = 1; i < n; ++i) {
        const int    target = order[static_cast<std::size_t>(i - 1)];
        const Vector g      = tdlGradientAnalytic(z, d, tau, a, i).gradient;
        Vector       fd(4);
        for (int c = 0; c < 4; ++c) fd(c) = centralDifference(z, d, tau, a, target, c, 1e-4);
        for (int c = 0; c < 4; ++c) EXPECT_LE(relativeError(g(c), fd(c), fd.cwiseAbs().maxCoeff()), 1e-6);
      }
    }
  }
}

TEST(TdlGradient, NearestAttractsFarthestRepels) {
  Rng rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    const int    n = 3 + static_cast<int>(rng.uniformInt(10));
    const Matrix z = normalMatrix(rng, n, 5);
    const Matrix d = pairwiseDistances(normalMatrix(rng, n, 4));
    for (int a = 0; a < n; ++a) {
      const auto nearest  = tdlGradientAnalytic(z, d, 0.1, a, 1);
      const auto farthest = tdlGradientAnalytic(z, d, 0.1, a, n - 1);
      EXPECT_LT(nearest.coefficient, 0.0);
      EXPECT_GT(farthest.coefficient, 0.0);
      EXPECT_TRUE(nearest.gradient.isApprox(nearest.coefficient * z.row(a).transpose()));
    }
  }
}

TEST(TdlGradient, IndexErrors) {
  const Matrix z = Matrix::Ones(4, 2);
  const Matrix d = Matrix::Zero(4, 4);
  EXPECT_THROW(tdlGradientAnalytic(z, d, 0.1, 4, 1), IndexOutOfRange);
  EXPECT_THROW(tdlGradientAnalytic(z, d, 0.1, -1, 1), IndexOutOfRange);
  EXPECT_THROW(tdlGradientAnalytic(z, d, 0.1, 0, 0), IndexOutOfRange);
  EXPECT_THROW(tdlGradientAnalytic(z, d, 0.1, 0, 4), IndexOutOfRange);
}

TEST(DistanceOrder, TiesBrokenByIndex) {
  Matrix d = Matrix::Zero(4, 4);
  d.row(0) << 0, 2, 1, 1;
  EXPECT_EQ(distanceOrder(d, 0), (std::vector<int>{2, 3, 1}));
}

TEST(TdlViews, IdenticalViewsAndFingerprintsGiveSoftmaxOverAll) {
  Rng          rng(11);
  const int    n   = 4;
  const Matrix z   = normalMatrix(rng, n, 3);
  const Matrix f   = Matrix::Zero(n, 2);
  const double tau = 0.3;
  const Vector nr  = z.rowwise().norm();
  double       expected = 0.0;
  for (int a = 0; a < n; ++a) {
    double den = 0.0;
    for (int k = 0; k < n; ++k) den += std::exp(z.row(a).dot(z.row(k)) / (nr(a) * nr(k) * tau));
    for (int m = 0; m < n; ++m) expected += (std::log(den) - z.row(a).dot(z.row(m)) / (nr(a) * nr(m) * tau)) / (n - 1);
  }
  expected /= n;
  EXPECT_NEAR(tdlViewsLoss(z, z, f, f, tau), expected, 1e-12);
  ad::Tape t;
  EXPECT_NEAR(tdlViewsLoss(t, t.variable(z), t.variable(z), crossDistances(f, f), tau).scalar(), expected, 1e-12);
}

TEST(TdlViews, SingleSampleIsZeroAndRelabelingInvariant) {
  Rng rng(12);
  EXPECT_EQ(tdlViewsLoss(normalMatrix(rng, 1, 3), normalMatrix(rng, 1, 3), Matrix::Ones(1, 2), Matrix::Ones(1, 2), 0.1), 0.0);
  const int        n  = 6;
  const Matrix     zi = normalMatrix(rng, n, 3), zj = normalMatrix(rng, n, 3);
  const Matrix     fi = normalMatrix(rng, n, 4), fj = normalMatrix(rng, n, 4);
  const std::vector<int> perm = {3, 0, 5, 1, 4, 2};
  Matrix pzi(n, 3), pzj(n, 3), pfi(n, 4), pfj(n, 4);
  for (int r = 0; r < n; ++r) {
    const int s = perm[static_cast<std::size_t>(r)];
    pzi.row(r) = zi.row(s);
    pzj.row(r) = zj.row(s);
    pfi.row(r) = fi.row(s);
    pfj.row(r) = fj.row(s);
  }
  EXPECT_NEAR(tdlViewsLoss(zi, zj, fi, fj, 0.1), tdlViewsLoss(pzi, pzj, pfi, pfj, 0.1), 1e-12);
  ad::Tape t;
  EXPECT_NEAR(tdlViewsLoss(t, t.variable(zi), t.variable(zj), crossDistances(fi, fj), 0.1).scalar(),
              tdlViewsLoss(zi, zj, fi, fj, 0.1), 1e-12);
}

TEST(TdlViews, AutodiffGradient) {
  Rng        rng(13);
  const auto x = crossDistances(normalMatrix(rng, 5, 3), normalMatrix(rng, 5, 3));
  const auto report = ad::gradCheck(
      [&](ad::Tape& t, std::span<const ad::Var> in) { return tdlViewsLoss(t, in[0], in[1], x, 0.2); },
      {normalMatrix(rng, 5, 3), normalMatrix(rng, 5, 3)}, {1e-6, 1e-5});
  EXPECT_TRUE(report.passed) << report.maxRelativeError;
}

TEST(Tae, Examples) {
  Rng          rng(14);
  const Matrix f = normalMatrix(rng, 4, 6);
  EXPECT_EQ(taeLoss(f, f), 0.0);
  EXPECT_NEAR(taeLoss((f.array() + 1.0).matrix(), f), 1.0, 1e-14);
  const Matrix h = normalMatrix(rng, 4, 6);
  double       direct = 0.0;
  for (int r = 0; r < 4; ++r) {
    double row = 0.0;
    for (int c = 0; c < 6; ++c) row += (h(r, c) - f(r, c)) * (h(r, c) - f(r, c));
    direct += row / 6.0;
  }
  EXPECT_NEAR(taeLoss(h, f), direct / 4.0, 1e-14);
  ad::Tape t;
  EXPECT_NEAR(taeLoss(t, t.variable(h), f).scalar(), direct / 4.0, 1e-14);
  EXPECT_THROW(taeLoss(h, Matrix::Zero(4, 5)), LengthMismatch);
}

TEST(NtXent, ClosedFormFixture) {
  // Identical positives, orthogonal negatives, tau = 1: each row sees e^1 over e^1 + 2 e^0.
  Matrix z(2, 3);
  z << 1, 0, 0, 0, 1, 0;
  const double expected = std::log(1.0 + 2.0 / std::exp(1.0));
  EXPECT_NEAR(ntxentLoss(z, z, 1.0), expected, 1e-15);
  ad::Tape t;
  EXPECT_NEAR(ntxentLoss(t, t.variable(z), t.variable(z), 1.0).scalar(), expected, 1e-15);
}

TEST(NtXent, SingleGraphIsZero) {
  EXPECT_EQ(ntxentLoss(Matrix::Ones(1, 3), Matrix::Ones(1, 3), 0.1), 0.0);
}

TEST(NtXent, DecreasesAsPositivesAlign) {
  Rng    rng(15);
  Matrix zi = normalMatrix(rng, 4, 3);
  Matrix zj = normalMatrix(rng, 4, 3);
  double prev = ntxentLoss(zi, zj, 0.5);
  for (int step = 1; step <= 5; ++step) {
    Matrix moved = zj;
    moved.row(0) = (1.0 - 0.2 * step) * zj.row(0) + 0.2 * step * zi.row(0);
    const double cur = ntxentLoss(zi, moved, 0.5);
    EXPECT_LT(cur, prev);
    prev = cur;
  }
}

TEST(NtXent, AutodiffAgreesWithDirectAndFiniteDifferences) {
  Rng          rng(16);
  const Matrix zi = normalMatrix(rng, 5, 4), zj = normalMatrix(rng, 5, 4);
  ad::Tape     t;
  EXPECT_NEAR(ntxentLoss(t, t.variable(zi), t.variable(zj), 0.1).scalar(), ntxentLoss(zi, zj, 0.1), 1e-12);
  const auto report = ad::gradCheck([](ad::Tape& tp, std::span<const ad::Var> in) { return ntxentLoss(tp, in[0], in[1], 0.3); },
                                    {zi, zj}, {1e-6, 1e-5});
  EXPECT_TRUE(report.passed) << report.maxRelativeError;
}

TEST(Combined, LambdaScalesTheTdlTerm) {
  EXPECT_EQ(combinedLoss(1.5, 0.25, 0.0), 1.5);
  EXPECT_EQ(combinedLoss(1.5, 0.25, 1.0), 1.75);
  EXPECT_EQ(combinedLoss(1.5, 0.25, 2.0), 2.0);
  ad::Tape t;
  EXPECT_EQ(combinedLoss(t.scalarConstant(1.5), t.scalarConstant(0.25), 2.0).scalar(), 2.0);
}

TEST(LossConfig, ValidationAndNames) {
  EXPECT_NO_THROW(LossConfig{}.validate());
  EXPECT_THROW((LossConfig{0.0}).validate(), InvalidArgument);
  EXPECT_THROW((LossConfig{0.1, -1.0}).validate(), InvalidArgument);
  for (LossMode m : {LossMode::TDL, LossMode::TDLViews, LossMode::TAE, LossMode::NTXent, LossMode::Combined})
    EXPECT_EQ(lossModeFromName(lossModeName(m)), m);
  EXPECT_THROW(lossModeFromName("triplet"), InvalidArgument);
}
