// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "topocl/error.h"
#include "topocl/linalg.h"

namespace topocl::ad {

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class Tape;

//! Handle to a node on a tape. Cheap to copy; valid until the tape is reset.
struct Var {
  Tape* tape = nullptr;
  int   id   = -1;

  const Matrix& value() const;
  Eigen::Index  rows() const { return value().rows(); }
  Eigen::Index  cols() const { return value().cols(); }
  //! Value of a 1x1 node.
  double scalar() const;
};

//! Reverse-mode tape over dense row-major double matrices. Scalars are 1x1. Nodes are recorded in
//! creation order, which is a topological order; backward visits them once in reverse.
class Tape {
 public:
  //! Leaf that receives a gradient.
  Var variable(Matrix value);
  //! Leaf without gradient.
  Var constant(Matrix value);
  Var scalarConstant(double value);

  //! Seeds d(root)/d(root) = 1; root must be 1x1. Gradients accumulate into every node that
  //! requires one. Calling twice without reset adds the second pass on top.
  void backward(Var root);

  //! Gradient of a node after backward; zero matrix of the node's shape when nothing flowed in.
  Matrix grad(Var v) const;

  //! Drops every node and gradient.
  void        reset();
  std::size_t size() const { return nodes_.size(); }

  //! Internal: records an op. `backward` reads the output gradient and accumulates into inputs.
  Var record(Matrix value, bool requiresGrad, std::function<void(Tape&, int self)> backward);
  const Matrix& valueOf(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  bool          requiresGrad(int id) const { return nodes_[static_cast<std::size_t>(id)].requiresGrad; }
  const Matrix& gradOf(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  //! Adds `g` into the gradient of node `id` (no-op for constants).
  void accumulate(int id, const Matrix& g);

 private:
  struct Node {
    Matrix                                value;
    Matrix                                grad;
    bool                                  requiresGrad = false;
    std::function<void(Tape&, int self)> backward;
  };
  std::vector<Node> nodes_;
};

// Elementwise binary ops accept equal shapes, or b broadcast as 1xC (per row), Rx1 (per column) or 1x1.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var matmul(Var a, Var b);
Var transpose(Var a);
Var scale(Var a, double s);
Var addScalar(Var a, double s);
Var neg(Var a);
Var relu(Var a);
Var exp(Var a);
//! Throws InvalidArgument for non-positive entries.
Var log(Var a);
//! Sum of all entries (1x1).
Var sum(Var a);
//! Mean of all entries (1x1).
Var mean(Var a);
//! axis 0: column sums (1xC); axis 1: row sums (Rx1).
Var sumAxis(Var a, int axis);
//! axis 0: column maxima (1xC); axis 1: row maxima (Rx1). Gradient flows to the first maximum.
Var maxAxis(Var a, int axis);
//! axis 0 stacks rows, axis 1 joins columns.
Var concat(std::span<const Var> parts, int axis);
//! out[k] = a[rows[k]].
Var gatherRows(Var a, std::span<const int> rows);
//! out[rows[k]] += a[k], out has `outRows` rows.
Var scatterAddRows(Var a, std::span<const int> rows, Eigen::Index outRows);
//! Each row scaled to unit Euclidean norm. Throws ZeroNorm for a zero row.
Var l2NormalizeRows(Var a);
//! Elementwise product with a fixed matrix of the same shape (dropout masks, indicator weights).
Var mulConstant(Var a, const Matrix& c);

struct GradCheckOptions {
  double        epsilon = 1e-6;
  double        tolerance = 1e-6;
  //! Check at most this many coordinates, sampled with `seed` (0 = all).
  std::size_t   maxCoordinates = 0;
  std::uint64_t seed = 0;
  //! A coordinate is flagged non-smooth when the one-sided slopes differ by more than this
  //! fraction of their scale.
  double        kinkThreshold = 1e-3;
};

struct GradCheckCoordinate {
  std::size_t input = 0;
  Eigen::Index row = 0;
  Eigen::Index col = 0;
};

struct GradCheckReport {
  //! max over checked coordinates of |analytic - numeric| / max(|analytic|, |numeric|, floor),
  //! with floor = 1e-3 * (largest |numeric| over checked coordinates) + 1e-12.
  double                           maxRelativeError = 0.0;
  std::size_t                      checked          = 0;
  std::vector<GradCheckCoordinate> nonSmooth;
  bool                             passed = false;
};

using TapeFunction = std::function<Var(Tape&, std::span<const Var> inputs)>;

//! Central-difference check of d f / d inputs at `point`. f must return a 1x1 node and be
//! deterministic.
GradCheckReport gradCheck(const TapeFunction& f, const std::vector<Matrix>& point, const GradCheckOptions& options = {});

}  // namespace topocl::ad
