// SPDX-License-Identifier: Apache-2.0

#include "topocl/linalg.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace topocl {

namespace {

double offDiagonalNorm(const Matrix& a) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (i != j) acc += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(acc);
}

}  // namespace

SymmetricEigen jacobiEigen(const Matrix& symmetric, JacobiOptions options) {
  if (symmetric.rows() != symmetric.cols()) {
    throw LengthMismatch("jacobiEigen needs a square matrix");
  }
  const Eigen::Index n = symmetric.rows();
  Matrix             a = symmetric;
  Matrix             v = Matrix::Identity(n, n);
  const double       threshold = options.tolerance * std::max(1.0, symmetric.norm());

  int sweep = 0;
  for (; offDiagonalNorm(a) > threshold; ++sweep) {
    if (sweep >= options.maxSweeps) {
      throw EigenNonConvergence("Jacobi eigensolver did not converge in " + std::to_string(options.maxSweeps) +
                                " sweeps");
    }
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation angle that annihilates a(p, q).
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t     = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c     = 1.0 / std::sqrt(t * t + 1.0);
        const double s     = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p)          = c * akp - s * akq;
          a(k, q)          = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k)          = c * apk - s * aqk;
          a(q, k)          = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p)          = c * vkp - s * vkq;
          v(k, q)          = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return a(x, x) < a(y, y); });

  SymmetricEigen out;
  out.sweeps = sweep;
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    out.values.push_back(a(src, src));
    out.vectors.col(k) = v.col(src);
  }
  return out;
}

}  // namespace topocl
