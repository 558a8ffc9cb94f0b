// SPDX-License-Identifier: Apache-2.0

#include "topocl/evalprobe.h"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "topocl/io_util.h"
#include "topocl/rng.h"

namespace topocl {

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw LengthMismatch("pearson: sample sizes differ");
  if (x.size() < 2) throw DegenerateVariance("pearson needs at least two samples");
  const double n  = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double       sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw DegenerateVariance("first variable has zero variance");
  if (syy == 0.0) throw DegenerateVariance("second variable has zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

DistanceCorrelation pearsonDistanceCorrelation(const Matrix& z, const Matrix& fingerprints, std::size_t maxPairs,
                                               std::uint64_t seed) {
  if (z.rows() != fingerprints.rows()) throw LengthMismatch("embeddings and fingerprints differ in count");
  if (z.rows() < 3) throw InvalidArgument("distance correlation needs at least 3 samples");
  const auto          pairs = samplePairs(static_cast<std::size_t>(z.rows()), maxPairs, seed);
  std::vector<double> dz, di;
  dz.reserve(pairs.size());
  di.reserve(pairs.size());
  for (const auto& [a, b] : pairs) {
    const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
    dz.push_back((z.row(ia) - z.row(ib)).norm());
    di.push_back((fingerprints.row(ia) - fingerprints.row(ib)).norm());
  }
  return {pearson(dz, di), pairs.size()};
}

DistanceProbeResult distanceRegressionProbe(const Matrix& z, const Matrix& fingerprints, const DistanceProbeConfig& config) {
  if (z.rows() != fingerprints.rows()) throw LengthMismatch("embeddings and fingerprints differ in count");
  if (z.rows() < 3) throw InvalidArgument("distance probe needs at least 3 samples");
  if (!(config.testFraction > 0.0 && config.testFraction < 1.0)) throw InvalidArgument("testFraction must be in (0, 1)");
  auto pairs = samplePairs(static_cast<std::size_t>(z.rows()), config.maxPairs, config.seed);
  Rng  rng(deriveSeed(config.seed, 1));
  rng.shuffle(std::span(pairs));
  const std::size_t p     = pairs.size();
  const std::size_t nTest = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(config.testFraction * static_cast<double>(p))), 1, p - 1);
  const auto        d     = z.cols();
  Matrix            x(static_cast<Eigen::Index>(p), d + 1);
  Vector            y(static_cast<Eigen::Index>(p));
  for (std::size_t r = 0; r < p; ++r) {
    const auto ia = static_cast<Eigen::Index>(pairs[r].first), ib = static_cast<Eigen::Index>(pairs[r].second);
    const auto row = static_cast<Eigen::Index>(r);
    x.row(row).head(d) = (z.row(ia) - z.row(ib)).cwiseAbs();
    x(row, d)          = 1.0;
    y(row)             = (fingerprints.row(ia) - fingerprints.row(ib)).norm();
  }
  if (config.shuffleTargets) {
    std::vector<double> t(y.data(), y.data() + y.size());
    Rng                 shuffler(deriveSeed(config.seed, 2));
    shuffler.shuffle(std::span(t));
    y = Eigen::Map<Vector>(t.data(), static_cast<Eigen::Index>(t.size()));
  }
  const auto   nt     = static_cast<Eigen::Index>(nTest);
  const auto   ntrain = static_cast<Eigen::Index>(p - nTest);
  const Matrix xtrain = x.bottomRows(ntrain);
  const Vector ytrain = y.tail(ntrain);
  const Vector w      = xtrain.colPivHouseholderQr().solve(ytrain);
  const Vector resid  = x.topRows(nt) * w - y.head(nt);
  const Vector ytest  = y.head(nt);
  DistanceProbeResult out;
  out.testMse        = resid.squaredNorm() / static_cast<double>(nt);
  out.targetVariance = (ytest.array() - ytest.mean()).square().sum() / static_cast<double>(nt);
  out.trainPairs     = p - nTest;
  out.testPairs      = nTest;
  return out;
}

FingerprintProbeResult linearFingerprintProbe(const Matrix& z, const Matrix& fingerprints, const FingerprintProbeConfig& config) {
  if (z.rows() != fingerprints.rows()) throw LengthMismatch("embeddings and fingerprints differ in count");
  if (z.rows() < 4) throw InvalidArgument("fingerprint probe needs at least 4 samples");
  if (!(config.testFraction > 0.0 && config.testFraction < 1.0)) throw InvalidArgument("testFraction must be in (0, 1)");
  const auto               n = static_cast<std::size_t>(z.rows());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(deriveSeed(config.seed, 3));
  rng.shuffle(std::span(order));
  const std::size_t nTest =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(config.testFraction * static_cast<double>(n))), 3, n - 1);
  const auto d = z.cols();
  auto design = [&](std::size_t from, std::size_t count) {
    Matrix x(static_cast<Eigen::Index>(count), d + 1);
    for (std::size_t r = 0; r < count; ++r) {
      x.row(static_cast<Eigen::Index>(r)).head(d) = z.row(static_cast<Eigen::Index>(order[from + r]));
      x(static_cast<Eigen::Index>(r), d)          = 1.0;
    }
    return x;
  };
  auto targets = [&](std::size_t from, std::size_t count) {
    Matrix y(static_cast<Eigen::Index>(count), fingerprints.cols());
    for (std::size_t r = 0; r < count; ++r) y.row(static_cast<Eigen::Index>(r)) = fingerprints.row(static_cast<Eigen::Index>(order[from + r]));
    return y;
  };
  // Dead embedding coordinates make the design rank deficient; the minimum-norm solution keeps
  // the fit unique.
  const Matrix w = design(nTest, n - nTest).completeOrthogonalDecomposition().solve(targets(nTest, n - nTest));
  FingerprintProbeResult out;
  out.testIndices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(nTest));
  out.predictions = design(0, nTest) * w;
  out.testMse     = (out.predictions - targets(0, nTest)).squaredNorm() / static_cast<double>(out.predictions.size());
  return out;
}

DistanceCorrelation probedDistanceCorrelation(const Matrix& z, const Matrix& fingerprints, std::size_t maxPairs,
                                              const FingerprintProbeConfig& config) {
  const FingerprintProbeResult probe = linearFingerprintProbe(z, fingerprints, config);
  Matrix                       truth(probe.predictions.rows(), fingerprints.cols());
  for (std::size_t r = 0; r < probe.testIndices.size(); ++r) {
    truth.row(static_cast<Eigen::Index>(r)) = fingerprints.row(static_cast<Eigen::Index>(probe.testIndices[r]));
  }
  return pearsonDistanceCorrelation(probe.predictions, truth, maxPairs, config.seed);
}

CovarianceSpectrum covarianceSingularValues(const Matrix& z) {
  if (z.rows() < 2) throw InvalidArgument("covariance needs at least 2 samples");
  const Matrix centered = z.rowwise() - z.colwise().mean();
  Matrix       cov      = centered.transpose() * centered / static_cast<double>(z.rows() - 1);
  cov                   = 0.5 * (cov + cov.transpose());
  const auto eig        = jacobiEigen(cov);
  CovarianceSpectrum out;
  out.values.assign(eig.values.rbegin(), eig.values.rend());
  for (double& v : out.values) v = std::max(v, 0.0);
  const double top = out.values.empty() ? 0.0 : out.values.front();
  for (double v : out.values) {
    out.logs.push_back(std::log(std::max(v, kSpectrumFloor)));
    out.collapsed.push_back(v <= kSpectrumFloor || v <= kRelativeCollapse * top);
  }
  return out;
}

double rocAuc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw LengthMismatch("rocAuc: scores and labels differ in count");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double      positiveRankSum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1 .. j
    for (std::size_t t = i; t < j; ++t) {
      const int l = labels[order[t]];
      if (l != 0 && l != 1) throw InvalidArgument("rocAuc labels must be 0 or 1");
      if (l == 1) {
        positiveRankSum += rank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) throw DegenerateLabels("rocAuc needs both classes");
  const double p = static_cast<double>(positives);
  return (positiveRankSum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(negatives));
}

std::vector<double> knnScores(const Matrix& train, std::span<const int> trainLabels, const Matrix& test, int k) {
  if (static_cast<std::size_t>(train.rows()) != trainLabels.size()) throw LengthMismatch("knn: labels differ from training rows");
  if (train.cols() != test.cols()) throw LengthMismatch("knn: train and test widths differ");
  if (k < 1 || k > train.rows()) throw InvalidArgument("knn: k must be in [1, training size]");
  std::vector<double> scores;
  std::vector<int>    idx(static_cast<std::size_t>(train.rows()));
  std::vector<double> dist(idx.size());
  for (Eigen::Index t = 0; t < test.rows(); ++t) {
    for (Eigen::Index r = 0; r < train.rows(); ++r) dist[static_cast<std::size_t>(r)] = (train.row(r) - test.row(t)).squaredNorm();
    std::iota(idx.begin(), idx.end(), 0);
    std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int a, int b) {
      const double da = dist[static_cast<std::size_t>(a)], db = dist[static_cast<std::size_t>(b)];
      return da < db || (da == db && a < b);
    });
    int positives = 0;
    for (int i = 0; i < k; ++i) positives += trainLabels[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] == 1;
    scores.push_back(static_cast<double>(positives) / k);
  }
  return scores;
}

double knnProbe(const Matrix& train, std::span<const int> trainLabels, const Matrix& test, std::span<const int> testLabels,
                int k) {
  return rocAuc(knnScores(train, trainLabels, test, k), testLabels);
}

namespace {

constexpr std::size_t kEnumerateAllPairs = 200000;

}  // namespace

PairHistogram alignmentHistograms(const Matrix& z, std::span<const int> classes, const AlignmentConfig& config) {
  if (static_cast<std::size_t>(z.rows()) != classes.size()) throw LengthMismatch("alignment: classes differ from rows");
  if (config.bins == 0) throw InvalidArgument("alignment: bins must be positive");
  const std::size_t n     = classes.size();
  const std::size_t total = n < 2 ? 0 : n * (n - 1) / 2;
  Rng               rng(config.seed);
  std::vector<std::pair<std::size_t, std::size_t>> pos, neg;
  auto offer = [&](std::size_t a, std::size_t b) {
    auto& group = classes[a] == classes[b] ? pos : neg;
    if (group.size() < config.pairs) group.emplace_back(a, b);
  };
  if (total <= kEnumerateAllPairs) {
    std::vector<std::pair<std::size_t, std::size_t>> all;
    all.reserve(total);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b) all.emplace_back(a, b);
    rng.shuffle(std::span(all));
    for (const auto& [a, b] : all) offer(a, b);
  } else {
    std::unordered_set<std::uint64_t> seen;
    const std::size_t                 attempts = 100 * 2 * config.pairs;
    for (std::size_t t = 0; t < attempts && (pos.size() < config.pairs || neg.size() < config.pairs); ++t) {
      std::size_t a = static_cast<std::size_t>(rng.uniformInt(n));
      std::size_t b = static_cast<std::size_t>(rng.uniformInt(n - 1));
      if (b >= a) ++b;
      if (a > b) std::swap(a, b);
      if (seen.insert(static_cast<std::uint64_t>(a) * n + b).second) offer(a, b);
    }
  }
  auto distance = [&](const std::pair<std::size_t, std::size_t>& p) {
    return (z.row(static_cast<Eigen::Index>(p.first)) - z.row(static_cast<Eigen::Index>(p.second))).norm();
  };
  std::vector<double> dp, dn;
  for (const auto& p : pos) dp.push_back(distance(p));
  for (const auto& p : neg) dn.push_back(distance(p));
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double d : dp) lo = std::min(lo, d), hi = std::max(hi, d);
  for (double d : dn) lo = std::min(lo, d), hi = std::max(hi, d);
  const double span = hi > lo ? hi - lo : 0.0;
  auto normalize = [&](double d) { return span > 0.0 ? (d - lo) / span : 0.0; };

  PairHistogram h;
  for (std::size_t b = 0; b <= config.bins; ++b) h.edges.push_back(static_cast<double>(b) / static_cast<double>(config.bins));
  h.first.assign(config.bins, 0);
  h.second.assign(config.bins, 0);
  double sp = 0.0, sn = 0.0;
  for (double d : dp) {
    const double v = normalize(d);
    ++h.first[binIndex(v, 0.0, 1.0, config.bins)];
    sp += v;
  }
  for (double d : dn) {
    const double v = normalize(d);
    ++h.second[binIndex(v, 0.0, 1.0, config.bins)];
    sn += v;
  }
  h.firstMean  = dp.empty() ? 0.0 : sp / static_cast<double>(dp.size());
  h.secondMean = dn.empty() ? 0.0 : sn / static_cast<double>(dn.size());
  h.pairs      = dp.size() + dn.size();
  return h;
}

std::vector<int> classesFromFingerprints(const Matrix& fingerprints) {
  std::vector<int> out(static_cast<std::size_t>(fingerprints.rows()), -1);
  int              next = 0;
  for (Eigen::Index i = 0; i < fingerprints.rows(); ++i) {
    if (out[static_cast<std::size_t>(i)] >= 0) continue;
    out[static_cast<std::size_t>(i)] = next;
    for (Eigen::Index j = i + 1; j < fingerprints.rows(); ++j)
      if (out[static_cast<std::size_t>(j)] < 0 && fingerprints.row(i) == fingerprints.row(j)) out[static_cast<std::size_t>(j)] = next;
    ++next;
  }
  return out;
}

std::string alignmentToCsv(const PairHistogram& h) {
  return pairHistogramToCsv(h, "pos_count", "neg_count");
}

std::string alignmentToGnuplot(const PairHistogram& h) {
  std::string out = "# bin_left bin_right pos_count neg_count\n";
  for (std::size_t b = 0; b + 1 < h.edges.size(); ++b) {
    out += formatDouble(h.edges[b]) + " " + formatDouble(h.edges[b + 1]) + " " + std::to_string(h.first[b]) + " " +
           std::to_string(h.second[b]) + "\n";
  }
  return out;
}

std::string spectrumToCsv(const CovarianceSpectrum& spectrum) {
  std::string out = "index,value,log_value,collapsed\n";
  for (std::size_t i = 0; i < spectrum.values.size(); ++i) {
    out += std::to_string(i) + "," + formatDouble(spectrum.values[i]) + "," + formatDouble(spectrum.logs[i]) + "," +
           (spectrum.collapsed[i] ? "1" : "0") + "\n";
  }
  return out;
}

}  // namespace topocl
