// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include <Eigen/Dense>

#include "topocl/error.h"

namespace topocl {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

class EigenNonConvergence : public Error {
 public:
  using Error::Error;
};

struct SymmetricEigen {
  //! Ascending eigenvalues.
  std::vector<double> values;
  //! Orthonormal eigenvectors as columns, in the order of `values`.
  Matrix vectors;
  int    sweeps = 0;
};

struct JacobiOptions {
  //! Convergence when the off-diagonal Frobenius norm drops below tolerance * max(1, ||A||_F).
  double tolerance = 1e-10;
  int    maxSweeps = 100;
};

//! Cyclic Jacobi eigendecomposition of a symmetric matrix. Throws EigenNonConvergence after
//! `maxSweeps` sweeps without meeting the tolerance.
SymmetricEigen jacobiEigen(const Matrix& symmetric, JacobiOptions options = {});

}  // namespace topocl
