// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>
#include <vector>

#include "topocl/autodiff.h"
#include "topocl/error.h"
#include "topocl/linalg.h"

namespace topocl {

class BatchTooSmall : public Error {
 public:
  using Error::Error;
};

class ZeroNormEmbedding : public ZeroNorm {
 public:
  using ZeroNorm::ZeroNorm;
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

enum class Similarity { Cosine, Dot };

enum class LossMode { TDL, TDLViews, TAE, NTXent, Combined };

std::string_view lossModeName(LossMode mode);
//! "tdl", "tdl-views", "tae", "ntxent", "combined".
LossMode         lossModeFromName(std::string_view name);

struct LossConfig {
  double   tau    = 0.1;
  double   lambda = 1.0;
  LossMode mode   = LossMode::TDL;
  //! Base objective of Combined mode.
  LossMode base   = LossMode::NTXent;

  //! Throws InvalidArgument unless tau > 0, lambda >= 0 and base is not Combined.
  void validate() const;
  bool operator==(const LossConfig&) const = default;
};

//! D[n][k] = ||I_n - I_k||_2.
Matrix pairwiseDistances(const Matrix& fingerprints);
//! D[n][k] = ||A_n - B_k||_2.
Matrix crossDistances(const Matrix& a, const Matrix& b);

//! Per-anchor TDL with N samples and similarity s:
//!   L_n = 1/(N-1) sum_{m != n} [log sum_{k != n, D[n][k] >= D[n][m]} exp(s_nk / tau) - s_nm / tau].
//! Only comparisons of D enter, so any strictly increasing transform of D leaves every L_n unchanged.
std::vector<double> tdlPerSample(const Matrix& z, const Matrix& distances, double tau, Similarity sim = Similarity::Cosine);
//! Mean of tdlPerSample over anchors with D = pairwiseDistances(fingerprints). Throws BatchTooSmall
//! for N < 2 and ZeroNormEmbedding for a zero row under cosine similarity.
double tdlLoss(const Matrix& z, const Matrix& fingerprints, double tau, Similarity sim = Similarity::Cosine);
double tdlLossFromDistances(const Matrix& z, const Matrix& distances, double tau, Similarity sim = Similarity::Cosine);

//! Taped cosine TDL (mean over anchors).
ad::Var tdlLoss(ad::Tape& tape, ad::Var z, const Matrix& distances, double tau);

//! Samples other than n, by increasing D[n][.] with ties broken by index: d_1 .. d_{N-1}.
std::vector<int> distanceOrder(const Matrix& distances, int n);

struct TdlGradient {
  //! d L_n / d z_{d_i} for dot-product similarity; always coefficient * z_n.
  Vector gradient;
  double coefficient = 0.0;
};

//! Closed form of the gradient of L_n (dot-product similarity) with respect to the i-th nearest
//! sample, i in [1, N-1]:
//!   coefficient = (1/(N-1)) (sum_{m : d_i in S_m} exp(s_{n,d_i}/tau) / sum_{k in S_m} exp(s_nk/tau) - 1) / tau
//! with S_m = {k != n : D[n][k] >= D[n][m]}. Without ties S_{d_j} = {d_j .. d_{N-1}}. Throws
//! IndexOutOfRange for n or i outside their ranges.
TdlGradient tdlGradientAnalytic(const Matrix& z, const Matrix& distances, double tau, int n, int i);

//! TDL over two views: L_n = 1/(N-1) sum_m [log sum_k 1[X[n][k] >= X[n][m]] exp(s(z_ni, z_kj)/tau)
//! - s(z_ni, z_mj)/tau] with X = crossDistances(I_i, I_j), averaged over n. N = 1 gives 0.
double  tdlViewsLoss(const Matrix& zi, const Matrix& zj, const Matrix& fi, const Matrix& fj, double tau);
ad::Var tdlViewsLoss(ad::Tape& tape, ad::Var zi, ad::Var zj, const Matrix& crossDist, double tau);

//! Mean over samples and entries of (h - I)^2.
double  taeLoss(const Matrix& h, const Matrix& fingerprints);
ad::Var taeLoss(ad::Tape& tape, ad::Var h, const Matrix& fingerprints);

//! Normalized-temperature cross entropy over the 2N rows of [Z_i; Z_j]: each row's positive is the
//! other view of the same graph and its negatives are the remaining 2N - 2 rows. Mean over 2N rows.
//! N = 1 returns 0 and prints a warning.
double  ntxentLoss(const Matrix& zi, const Matrix& zj, double tau);
ad::Var ntxentLoss(ad::Tape& tape, ad::Var zi, ad::Var zj, double tau);

double  combinedLoss(double base, double tdl, double lambda);
ad::Var combinedLoss(ad::Var base, ad::Var tdl, double lambda);

}  // namespace topocl
