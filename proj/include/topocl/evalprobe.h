// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "topocl/error.h"
#include "topocl/linalg.h"
#include "topocl/metrics.h"

namespace topocl {

//! Every value on one side of a correlation is equal.
class DegenerateVariance : public Error {
 public:
  using Error::Error;
};

//! ROC-AUC needs at least one positive and one negative label.
class DegenerateLabels : public Error {
 public:
  using Error::Error;
};

double pearson(std::span<const double> x, std::span<const double> y);

struct DistanceCorrelation {
  double      r     = 0.0;
  std::size_t pairs = 0;
};

//! Pearson r between Euclidean embedding distances and Euclidean fingerprint distances over
//! samplePairs(N, maxPairs, seed). Throws InvalidArgument for N < 3.
DistanceCorrelation pearsonDistanceCorrelation(const Matrix& z, const Matrix& fingerprints, std::size_t maxPairs,
                                               std::uint64_t seed);

struct DistanceProbeConfig {
  std::size_t   maxPairs     = 10000;
  double        testFraction = 0.2;
  std::uint64_t seed         = 0;
  //! Null model: permute the targets before fitting.
  bool          shuffleTargets = false;
};

struct DistanceProbeResult {
  double      testMse        = 0.0;
  //! Variance of the test targets around their mean (the constant-predictor baseline).
  double      targetVariance = 0.0;
  std::size_t trainPairs     = 0;
  std::size_t testPairs      = 0;
};

//! Least-squares linear model with bias on |z_a - z_b| predicting ||I_a - I_b||. Sampled pairs are
//! shuffled with the seed and the first testFraction of them held out.
DistanceProbeResult distanceRegressionProbe(const Matrix& z, const Matrix& fingerprints, const DistanceProbeConfig& config);

struct FingerprintProbeConfig {
  double        testFraction = 0.2;
  std::uint64_t seed         = 0;
};

struct FingerprintProbeResult {
  //! Held-out rows in shuffled order; `predictions` row r belongs to sample testIndices[r].
  std::vector<std::size_t> testIndices;
  Matrix                   predictions;
  double                   testMse = 0.0;
};

//! Linear probe from frozen embeddings (plus bias) to fingerprints, fitted on the training rows as
//! the minimum-norm least-squares solution. The split shuffles sample indices with the seed and
//! holds out the first testFraction of them (at least 3, at most N - 1).
FingerprintProbeResult linearFingerprintProbe(const Matrix& z, const Matrix& fingerprints, const FingerprintProbeConfig& config);

//! Distance correlation measured on the embeddings from linear probing: Pearson r between
//! distances of the probe's held-out predictions and distances of their true fingerprints.
DistanceCorrelation probedDistanceCorrelation(const Matrix& z, const Matrix& fingerprints, std::size_t maxPairs,
                                              const FingerprintProbeConfig& config);

struct CovarianceSpectrum {
  //! Descending, nonnegative.
  std::vector<double> values;
  //! Natural log of max(value, kSpectrumFloor).
  std::vector<double> logs;
  std::vector<bool>   collapsed;
};

constexpr double kSpectrumFloor = 1e-300;
//! A value at or below this fraction of the largest one counts as collapsed as well; Jacobi leaves
//! rounding-level residue on exactly singular covariances.
constexpr double kRelativeCollapse = 1e-12;

//! Singular values of the (N - 1)-normalized covariance of mean-centered Z, from a Jacobi
//! eigendecomposition (the covariance is symmetric PSD, so they equal its eigenvalues).
CovarianceSpectrum covarianceSingularValues(const Matrix& z);

//! Mann-Whitney AUC with average ranks for ties. Labels are 0 or 1.
double rocAuc(std::span<const double> scores, std::span<const int> labels);

//! Fraction of positive labels among the k Euclidean nearest training rows of each test row; equal
//! distances are ordered by training index.
std::vector<double> knnScores(const Matrix& train, std::span<const int> trainLabels, const Matrix& test, int k = 5);
double knnProbe(const Matrix& train, std::span<const int> trainLabels, const Matrix& test, std::span<const int> testLabels,
                int k = 5);

struct AlignmentConfig {
  std::size_t   pairs = 10000;
  std::size_t   bins  = 20;
  std::uint64_t seed  = 0;
};

//! Positive pairs share a class, negative pairs do not; up to `pairs` of each are sampled without
//! replacement. Distances are min-max normalized over both groups together, then binned on [0, 1].
//! `first` holds positive counts, `second` negative counts.
PairHistogram alignmentHistograms(const Matrix& z, std::span<const int> classes, const AlignmentConfig& config);

//! Class ids from exact equality of fingerprint rows, numbered by first appearance.
std::vector<int> classesFromFingerprints(const Matrix& fingerprints);

//! CSV with header `bin_left,bin_right,pos_count,neg_count`.
std::string alignmentToCsv(const PairHistogram& h);
//! Whitespace-separated columns with a `#` header line, for gnuplot.
std::string alignmentToGnuplot(const PairHistogram& h);

//! Spectrum CSV with header `index,value,log_value,collapsed`.
std::string spectrumToCsv(const CovarianceSpectrum& spectrum);

}  // namespace topocl
