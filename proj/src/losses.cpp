// SPDX-License-Identifier: Apache-2.0

#include "topocl/losses.h"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

namespace topocl {

std::string_view lossModeName(LossMode mode) {
  switch (mode) {
    case LossMode::TDL:
      return "tdl";
    case LossMode::TDLViews:
      return "tdl-views";
    case LossMode::TAE:
      return "tae";
    case LossMode::NTXent:
      return "ntxent";
    case LossMode::Combined:
      return "combined";
  }
  return "tdl";
}

LossMode lossModeFromName(std::string_view name) {
  for (LossMode m : {LossMode::TDL, LossMode::TDLViews, LossMode::TAE, LossMode::NTXent, LossMode::Combined}) {
    if (lossModeName(m) == name) return m;
  }
  throw InvalidArgument("unknown loss mode '" + std::string(name) + "'");
}

void LossConfig::validate() const {
  if (!(tau > 0.0)) throw InvalidArgument("tau must be positive");
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be nonnegative");
  if (base == LossMode::Combined) throw InvalidArgument("combined loss cannot use itself as base");
}

Matrix crossDistances(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw LengthMismatch("fingerprint widths differ");
  Matrix d(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index k = 0; k < b.rows(); ++k) d(i, k) = (a.row(i) - b.row(k)).norm();
  return d;
}

Matrix pairwiseDistances(const Matrix& fingerprints) {
  return crossDistances(fingerprints, fingerprints);
}

namespace {

Matrix similarities(const Matrix& a, const Matrix& b, Similarity sim) {
  if (a.cols() != b.cols()) throw LengthMismatch("embedding widths differ");
  if (sim == Similarity::Dot) return a * b.transpose();
  const Vector na = a.rowwise().norm();
  const Vector nb = b.rowwise().norm();
  if ((na.array() == 0.0).any() || (nb.array() == 0.0).any()) throw ZeroNormEmbedding("embedding row with zero norm");
  const Matrix an = a.array().colwise() / na.array();
  const Matrix bn = b.array().colwise() / nb.array();
  return an * bn.transpose();
}

void requireSquare(const Matrix& z, const Matrix& d) {
  if (d.rows() != z.rows() || d.cols() != z.rows()) throw LengthMismatch("distance matrix must be N x N");
}

//! log sum_k w_k exp(x_k) over the entries with w_k true, shifted by the max for stability.
double logSumExp(const std::vector<double>& x) {
  // Empty only when distances are NaN, whose comparisons are all false.
  if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double mx = *std::max_element(x.begin(), x.end());
  double       acc = 0.0;
  for (double v : x) acc += std::exp(v - mx);
  return mx + std::log(acc);
}

void checkZeroRows(ad::Var z) {
  if ((z.value().rowwise().norm().array() == 0.0).any()) throw ZeroNormEmbedding("embedding row with zero norm");
}

}  // namespace

std::vector<double> tdlPerSample(const Matrix& z, const Matrix& distances, double tau, Similarity sim) {
  const auto n = static_cast<int>(z.rows());
  if (n < 2) throw BatchTooSmall("TDL needs at least 2 samples");
  requireSquare(z, distances);
  const Matrix        s = similarities(z, z, sim) / tau;
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  std::vector<double> terms;
  for (int a = 0; a < n; ++a) {
    double acc = 0.0;
    for (int m = 0; m < n; ++m) {
      if (m == a) continue;
      terms.clear();
      for (int k = 0; k < n; ++k) {
        if (k != a && distances(a, k) >= distances(a, m)) terms.push_back(s(a, k));
      }
      acc += logSumExp(terms) - s(a, m);
    }
    out[static_cast<std::size_t>(a)] = acc / (n - 1);
  }
  return out;
}

double tdlLossFromDistances(const Matrix& z, const Matrix& distances, double tau, Similarity sim) {
  const auto per = tdlPerSample(z, distances, tau, sim);
  return std::accumulate(per.begin(), per.end(), 0.0) / static_cast<double>(per.size());
}

double tdlLoss(const Matrix& z, const Matrix& fingerprints, double tau, Similarity sim) {
  if (fingerprints.rows() != z.rows()) throw LengthMismatch("embeddings and fingerprints differ in count");
  return tdlLossFromDistances(z, pairwiseDistances(fingerprints), tau, sim);
}

ad::Var tdlLoss(ad::Tape& tape, ad::Var z, const Matrix& distances, double tau) {
  const auto n = static_cast<int>(z.rows());
  if (n < 2) throw BatchTooSmall("TDL needs at least 2 samples");
  if (distances.rows() != n || distances.cols() != n) throw LengthMismatch("distance matrix must be N x N");
  checkZeroRows(z);
  const ad::Var zn      = ad::l2NormalizeRows(z);
  const ad::Var s       = ad::scale(ad::matmul(zn, ad::transpose(zn)), 1.0 / tau);
  const ad::Var shifted = ad::sub(s, ad::maxAxis(s, 1));
  const ad::Var e       = ad::exp(shifted);
  std::vector<ad::Var> logDen;
  logDen.reserve(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) {
    // M[k][m] = 1 when k enters the denominator of the (a, m) term; column a only keeps k = a so
    // that its log stays finite before being masked out.
    Matrix m = Matrix::Zero(n, n);
    for (int mm = 0; mm < n; ++mm) {
      if (mm == a) {
        m(a, a) = 1.0;
        continue;
      }
      for (int k = 0; k < n; ++k) {
        if (k != a && distances(a, k) >= distances(a, mm)) m(k, mm) = 1.0;
      }
    }
    const int row[] = {a};
    logDen.push_back(ad::log(ad::matmul(ad::gatherRows(e, row), tape.constant(std::move(m)))));
  }
  const ad::Var logD = ad::concat(logDen, 0);
  Matrix        offDiag = Matrix::Ones(n, n);
  offDiag.diagonal().setZero();
  const ad::Var terms = ad::mulConstant(ad::sub(logD, shifted), offDiag);
  return ad::scale(ad::sum(terms), 1.0 / (static_cast<double>(n) * (n - 1)));
}

std::vector<int> distanceOrder(const Matrix& distances, int n) {
  std::vector<int> order;
  for (int k = 0; k < distances.rows(); ++k)
    if (k != n) order.push_back(k);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return distances(n, a) < distances(n, b); });
  return order;
}

TdlGradient tdlGradientAnalytic(const Matrix& z, const Matrix& distances, double tau, int n, int i) {
  const auto count = static_cast<int>(z.rows());
  if (count < 2) throw BatchTooSmall("TDL needs at least 2 samples");
  requireSquare(z, distances);
  if (n < 0 || n >= count) throw IndexOutOfRange("anchor index " + std::to_string(n) + " outside [0, " + std::to_string(count) + ")");
  if (i < 1 || i > count - 1) throw IndexOutOfRange("rank " + std::to_string(i) + " outside [1, " + std::to_string(count - 1) + "]");
  const auto   order  = distanceOrder(distances, n);
  const int    target = order[static_cast<std::size_t>(i - 1)];
  const Vector s      = (z * z.row(n).transpose()) / tau;
  // Each softmax over S_m is shifted by its own maximum; a shared shift underflows whole sets once
  // the logits spread over hundreds (small tau).
  auto inSet = [&](int k, int m) { return distances(n, k) >= distances(n, m); };
  auto setMax = [&](int m) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int k : order)
      if (inSet(k, m)) mx = std::max(mx, s(k));
    return mx;
  };
  auto denominator = [&](int m, double mx) {
    double den = 0.0;
    for (int k : order)
      if (inSet(k, m)) den += std::exp(s(k) - mx);
    return den;
  };
  // sum_{m : target in S_m} p_m - 1 with the m = target term folded in, so both parts are sums of
  // nonnegative terms: p_target - 1 = -(sum_{k in S_target, k != target} e^{s_k}) / D_target.
  double attract = 0.0;
  for (int m : order) {
    if (m == target || !inSet(target, m)) continue;
    const double mx = setMax(m);
    attract += std::exp(s(target) - mx) / denominator(m, mx);
  }
  const double mt    = setMax(target);
  double       repel = 0.0;
  for (int k : order)
    if (k != target && inSet(k, target)) repel += std::exp(s(k) - mt);
  repel /= denominator(target, mt);
  const double acc = attract - repel;
  TdlGradient g;
  g.coefficient = acc / ((count - 1) * tau);
  g.gradient    = g.coefficient * z.row(n).transpose();
  return g;
}

double tdlViewsLoss(const Matrix& zi, const Matrix& zj, const Matrix& fi, const Matrix& fj, double tau) {
  const auto n = static_cast<int>(zi.rows());
  if (zj.rows() != n || fi.rows() != n || fj.rows() != n) throw LengthMismatch("view matrices differ in count");
  if (n == 0) throw BatchTooSmall("TDL over views needs at least 1 sample");
  if (n == 1) return 0.0;
  const Matrix        x = crossDistances(fi, fj);
  const Matrix        s = similarities(zi, zj, Similarity::Cosine) / tau;
  std::vector<double> terms;
  double              total = 0.0;
  for (int a = 0; a < n; ++a) {
    double acc = 0.0;
    for (int m = 0; m < n; ++m) {
      terms.clear();
      for (int k = 0; k < n; ++k)
        if (x(a, k) >= x(a, m)) terms.push_back(s(a, k));
      acc += logSumExp(terms) - s(a, m);
    }
    total += acc / (n - 1);
  }
  return total / n;
}

ad::Var tdlViewsLoss(ad::Tape& tape, ad::Var zi, ad::Var zj, const Matrix& crossDist, double tau) {
  const auto n = static_cast<int>(zi.rows());
  if (zj.rows() != n || crossDist.rows() != n || crossDist.cols() != n) throw LengthMismatch("view matrices differ in count");
  if (n == 0) throw BatchTooSmall("TDL over views needs at least 1 sample");
  if (n == 1) return tape.scalarConstant(0.0);
  checkZeroRows(zi);
  checkZeroRows(zj);
  const ad::Var s       = ad::scale(ad::matmul(ad::l2NormalizeRows(zi), ad::transpose(ad::l2NormalizeRows(zj))), 1.0 / tau);
  const ad::Var shifted = ad::sub(s, ad::maxAxis(s, 1));
  const ad::Var e       = ad::exp(shifted);
  std::vector<ad::Var> logDen;
  for (int a = 0; a < n; ++a) {
    Matrix m = Matrix::Zero(n, n);
    for (int mm = 0; mm < n; ++mm)
      for (int k = 0; k < n; ++k)
        if (crossDist(a, k) >= crossDist(a, mm)) m(k, mm) = 1.0;
    const int row[] = {a};
    logDen.push_back(ad::log(ad::matmul(ad::gatherRows(e, row), tape.constant(std::move(m)))));
  }
  const ad::Var logD = ad::concat(logDen, 0);
  return ad::scale(ad::sum(ad::sub(logD, shifted)), 1.0 / (static_cast<double>(n) * (n - 1)));
}

double taeLoss(const Matrix& h, const Matrix& fingerprints) {
  if (h.rows() != fingerprints.rows() || h.cols() != fingerprints.cols()) throw LengthMismatch("TAE output and fingerprint shapes differ");
  if (h.size() == 0) throw BatchTooSmall("TAE needs at least one sample");
  return (h - fingerprints).squaredNorm() / static_cast<double>(h.size());
}

ad::Var taeLoss(ad::Tape& tape, ad::Var h, const Matrix& fingerprints) {
  if (h.rows() != fingerprints.rows() || h.cols() != fingerprints.cols()) throw LengthMismatch("TAE output and fingerprint shapes differ");
  const ad::Var diff = ad::sub(h, tape.constant(fingerprints));
  return ad::mean(ad::mul(diff, diff));
}

namespace {

void warnSingleSample() {
  std::cerr << "warning: NT-Xent on a single graph has no negatives; returning 0\n";
}

}  // namespace

double ntxentLoss(const Matrix& zi, const Matrix& zj, double tau) {
  const auto n = static_cast<int>(zi.rows());
  if (zj.rows() != n) throw LengthMismatch("view matrices differ in count");
  if (n == 0) throw BatchTooSmall("NT-Xent needs at least 1 sample");
  if (n == 1) {
    warnSingleSample();
    return 0.0;
  }
  Matrix all(2 * n, zi.cols());
  all << zi, zj;
  const Matrix        s = similarities(all, all, Similarity::Cosine) / tau;
  double              total = 0.0;
  std::vector<double> terms;
  for (int a = 0; a < 2 * n; ++a) {
    const int pos = a < n ? a + n : a - n;
    terms.clear();
    for (int k = 0; k < 2 * n; ++k)
      if (k != a) terms.push_back(s(a, k));
    total += logSumExp(terms) - s(a, pos);
  }
  return total / (2 * n);
}

ad::Var ntxentLoss(ad::Tape& tape, ad::Var zi, ad::Var zj, double tau) {
  const auto n = static_cast<int>(zi.rows());
  if (zj.rows() != n) throw LengthMismatch("view matrices differ in count");
  if (n == 0) throw BatchTooSmall("NT-Xent needs at least 1 sample");
  if (n == 1) {
    warnSingleSample();
    return tape.scalarConstant(0.0);
  }
  checkZeroRows(zi);
  checkZeroRows(zj);
  const ad::Var parts[] = {zi, zj};
  const ad::Var zn      = ad::l2NormalizeRows(ad::concat(parts, 0));
  const ad::Var s       = ad::scale(ad::matmul(zn, ad::transpose(zn)), 1.0 / tau);
  const ad::Var shifted = ad::sub(s, ad::maxAxis(s, 1));
  Matrix        offDiag = Matrix::Ones(2 * n, 2 * n);
  offDiag.diagonal().setZero();
  Matrix positive = Matrix::Zero(2 * n, 2 * n);
  for (int a = 0; a < 2 * n; ++a) positive(a, a < n ? a + n : a - n) = 1.0;
  const ad::Var lse = ad::log(ad::sumAxis(ad::mulConstant(ad::exp(shifted), offDiag), 1));
  const ad::Var pos = ad::sumAxis(ad::mulConstant(shifted, positive), 1);
  return ad::mean(ad::sub(lse, pos));
}

double combinedLoss(double base, double tdl, double lambda) {
  return base + lambda * tdl;
}

ad::Var combinedLoss(ad::Var base, ad::Var tdl, double lambda) {
  return ad::add(base, ad::scale(tdl, lambda));
}

}  // namespace topocl
