// SPDX-License-Identifier: Apache-2.0

#include "topocl/autodiff.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "topocl/rng.h"

namespace topocl::ad {

const Matrix& Var::value() const {
  return tape->valueOf(id);
}

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw ShapeMismatch("scalar() on a non-1x1 node");
  return v(0, 0);
}

Var Tape::record(Matrix value, bool requiresGrad, std::function<void(Tape&, int)> backward) {
  nodes_.push_back(Node{std::move(value), Matrix(), requiresGrad, requiresGrad ? std::move(backward) : nullptr});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::variable(Matrix value) {
  return record(std::move(value), true, [](Tape&, int) {});
}

Var Tape::constant(Matrix value) {
  return record(std::move(value), false, nullptr);
}

Var Tape::scalarConstant(double value) {
  return constant(Matrix::Constant(1, 1, value));
}

void Tape::accumulate(int id, const Matrix& g) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.requiresGrad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var root) {
  if (root.tape != this) throw InvalidArgument("backward on a node of another tape");
  const Matrix& v = valueOf(root.id);
  if (v.rows() != 1 || v.cols() != 1) throw ShapeMismatch("backward: root must be 1x1");
  accumulate(root.id, Matrix::Ones(1, 1));
  for (int i = root.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.requiresGrad && n.backward && n.grad.size() != 0) n.backward(*this, i);
  }
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[static_cast<std::size_t>(v.id)];
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::reset() {
  nodes_.clear();
}

namespace {

std::string shapeOf(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

[[noreturn]] void mismatch(const char* op, const Matrix& a, const Matrix& b) {
  throw ShapeMismatch(std::string(op) + ": incompatible shapes " + shapeOf(a) + " and " + shapeOf(b));
}

Tape& tapeOf(Var a, Var b) {
  if (a.tape != b.tape || a.tape == nullptr) throw InvalidArgument("operands live on different tapes");
  return *a.tape;
}

bool anyGrad(Tape& t, Var a) {
  return t.requiresGrad(a.id);
}

bool anyGrad(Tape& t, Var a, Var b) {
  return t.requiresGrad(a.id) || t.requiresGrad(b.id);
}

enum class Broadcast { Same, Row, Col, Scalar };

Broadcast broadcastOf(const char* op, const Matrix& a, const Matrix& b) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::Same;
  if (b.rows() == 1 && b.cols() == 1) return Broadcast::Scalar;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::Row;
  if (b.cols() == 1 && b.rows() == a.rows()) return Broadcast::Col;
  mismatch(op, a, b);
}

//! b expanded to the shape of a.
Matrix expand(const Matrix& b, Broadcast mode, Eigen::Index rows, Eigen::Index cols) {
  switch (mode) {
    case Broadcast::Same:
      return b;
    case Broadcast::Row:
      return b.replicate(rows, 1);
    case Broadcast::Col:
      return b.replicate(1, cols);
    case Broadcast::Scalar:
      return Matrix::Constant(rows, cols, b(0, 0));
  }
  return b;
}

//! Sums a full-shape gradient down to the broadcast operand's shape.
Matrix reduce(const Matrix& g, Broadcast mode) {
  switch (mode) {
    case Broadcast::Same:
      return g;
    case Broadcast::Row:
      return g.colwise().sum();
    case Broadcast::Col:
      return g.rowwise().sum();
    case Broadcast::Scalar:
      return Matrix::Constant(1, 1, g.sum());
  }
  return g;
}

}  // namespace

Var add(Var a, Var b) {
  Tape&          t    = tapeOf(a, b);
  const Matrix&  av   = a.value();
  const auto     mode = broadcastOf("add", av, b.value());
  Matrix         out  = av + expand(b.value(), mode, av.rows(), av.cols());
  return t.record(std::move(out), anyGrad(t, a, b), [a, b, mode](Tape& tp, int self) {
    const Matrix& g = tp.gradOf(self);
    tp.accumulate(a.id, g);
    tp.accumulate(b.id, reduce(g, mode));
  });
}

Var sub(Var a, Var b) {
  Tape&         t    = tapeOf(a, b);
  const Matrix& av   = a.value();
  const auto    mode = broadcastOf("sub", av, b.value());
  Matrix        out  = av - expand(b.value(), mode, av.rows(), av.cols());
  return t.record(std::move(out), anyGrad(t, a, b), [a, b, mode](Tape& tp, int self) {
    const Matrix& g = tp.gradOf(self);
    tp.accumulate(a.id, g);
    tp.accumulate(b.id, -reduce(g, mode));
  });
}

Var mul(Var a, Var b) {
  Tape&         t    = tapeOf(a, b);
  const Matrix& av   = a.value();
  const auto    mode = broadcastOf("mul", av, b.value());
  Matrix        out  = av.cwiseProduct(expand(b.value(), mode, av.rows(), av.cols()));
  return t.record(std::move(out), anyGrad(t, a, b), [a, b, mode](Tape& tp, int self) {
    const Matrix& g  = tp.gradOf(self);
    const Matrix& av = tp.valueOf(a.id);
    const Matrix& bv = tp.valueOf(b.id);
    if (tp.requiresGrad(a.id)) tp.accumulate(a.id, g.cwiseProduct(expand(bv, mode, av.rows(), av.cols())));
    if (tp.requiresGrad(b.id)) tp.accumulate(b.id, reduce(g.cwiseProduct(av), mode));
  });
}

Var matmul(Var a, Var b) {
  Tape&         t  = tapeOf(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows()) mismatch("matmul", av, bv);
  Matrix out = av * bv;
  return t.record(std::move(out), anyGrad(t, a, b), [a, b](Tape& tp, int self) {
    const Matrix& g = tp.gradOf(self);
    if (tp.requiresGrad(a.id)) tp.accumulate(a.id, g * tp.valueOf(b.id).transpose());
    if (tp.requiresGrad(b.id)) tp.accumulate(b.id, tp.valueOf(a.id).transpose() * g);
  });
}

Var transpose(Var a) {
  Tape& t   = *a.tape;
  Matrix out = a.value().transpose();
  return t.record(std::move(out), anyGrad(t, a),
                  [a](Tape& tp, int self) { tp.accumulate(a.id, tp.gradOf(self).transpose()); });
}

Var scale(Var a, double s) {
  Tape&  t   = *a.tape;
  Matrix out = a.value() * s;
  return t.record(std::move(out), anyGrad(t, a), [a, s](Tape& tp, int self) { tp.accumulate(a.id, tp.gradOf(self) * s); });
}

Var addScalar(Var a, double s) {
  Tape&  t   = *a.tape;
  Matrix out = a.value().array() + s;
  return t.record(std::move(out), anyGrad(t, a), [a](Tape& tp, int self) { tp.accumulate(a.id, tp.gradOf(self)); });
}

Var neg(Var a) {
  return scale(a, -1.0);
}

Var relu(Var a) {
  Tape&  t   = *a.tape;
  Matrix out = a.value().cwiseMax(0.0);
  return t.record(std::move(out), anyGrad(t, a), [a](Tape& tp, int self) {
    const Matrix& x = tp.valueOf(a.id);
    tp.accumulate(a.id, (x.array() > 0.0).select(tp.gradOf(self), 0.0));
  });
}

Var exp(Var a) {
  Tape&  t   = *a.tape;
  Matrix out = a.value().array().exp();
  return t.record(std::move(out), anyGrad(t, a),
                  [a](Tape& tp, int self) { tp.accumulate(a.id, tp.gradOf(self).cwiseProduct(tp.valueOf(self))); });
}

Var log(Var a) {
  Tape&         t = *a.tape;
  const Matrix& x = a.value();
  if (!(x.array() > 0.0).all()) throw InvalidArgument("log of a non-positive entry");
  Matrix out = x.array().log();
  return t.record(std::move(out), anyGrad(t, a), [a](Tape& tp, int self) {
    tp.accumulate(a.id, tp.gradOf(self).cwiseQuotient(tp.valueOf(a.id)));
  });
}

Var sum(Var a) {
  Tape&  t   = *a.tape;
  Matrix out = Matrix::Constant(1, 1, a.value().sum());
  return t.record(std::move(out), anyGrad(t, a), [a](Tape& tp, int self) {
    const Matrix& x = tp.valueOf(a.id);
    tp.accumulate(a.id, Matrix::Constant(x.rows(), x.cols(), tp.gradOf(self)(0, 0)));
  });
}

Var mean(Var a) {
  const auto n = static_cast<double>(a.value().size());
  if (n == 0) throw ShapeMismatch("mean of an empty matrix");
  return scale(sum(a), 1.0 / n);
}

Var sumAxis(Var a, int axis) {
  if (axis != 0 && axis != 1) throw InvalidArgument("sumAxis: axis must be 0 or 1");
  Tape&  t   = *a.tape;
  Matrix out = axis == 0 ? Matrix(a.value().colwise().sum()) : Matrix(a.value().rowwise().sum());
  return t.record(std::move(out), anyGrad(t, a), [a, axis](Tape& tp, int self) {
    const Matrix& x = tp.valueOf(a.id);
    const Matrix& g = tp.gradOf(self);
    tp.accumulate(a.id, axis == 0 ? Matrix(g.replicate(x.rows(), 1)) : Matrix(g.replicate(1, x.cols())));
  });
}

Var maxAxis(Var a, int axis) {
  if (axis != 0 && axis != 1) throw InvalidArgument("maxAxis: axis must be 0 or 1");
  const Matrix& x = a.value();
  if (x.size() == 0) throw ShapeMismatch("maxAxis of an empty matrix");
  const Eigen::Index n = axis == 0 ? x.cols() : x.rows();
  std::vector<Eigen::Index> arg(static_cast<std::size_t>(n));
  Matrix out = axis == 0 ? Matrix(1, n) : Matrix(n, 1);
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index best = 0;
    if (axis == 0) {
      x.col(k).maxCoeff(&best);
      out(0, k) = x(best, k);
    } else {
      x.row(k).maxCoeff(&best);
      out(k, 0) = x(k, best);
    }
    arg[static_cast<std::size_t>(k)] = best;
  }
  Tape& t = *a.tape;
  return t.record(std::move(out), anyGrad(t, a), [a, axis, arg](Tape& tp, int self) {
    const Matrix& xv = tp.valueOf(a.id);
    const Matrix& g  = tp.gradOf(self);
    Matrix        ga = Matrix::Zero(xv.rows(), xv.cols());
    for (std::size_t k = 0; k < arg.size(); ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      if (axis == 0) {
        ga(arg[k], kk) = g(0, kk);
      } else {
        ga(kk, arg[k]) = g(kk, 0);
      }
    }
    tp.accumulate(a.id, ga);
  });
}

Var concat(std::span<const Var> parts, int axis) {
  if (parts.empty()) throw InvalidArgument("concat of nothing");
  if (axis != 0 && axis != 1) throw InvalidArgument("concat: axis must be 0 or 1");
  Tape&        t        = *parts[0].tape;
  Eigen::Index rows     = 0, cols = 0;
  bool         needGrad = false;
  for (const Var& p : parts) {
    if (p.tape != &t) throw InvalidArgument("operands live on different tapes");
    const Matrix& v = p.value();
    if (axis == 0) {
      if (rows > 0 && v.cols() != cols) mismatch("concat", parts[0].value(), v);
      cols = v.cols();
      rows += v.rows();
    } else {
      if (cols > 0 && v.rows() != rows) mismatch("concat", parts[0].value(), v);
      rows = v.rows();
      cols += v.cols();
    }
    needGrad = needGrad || t.requiresGrad(p.id);
  }
  Matrix       out(rows, cols);
  Eigen::Index offset = 0;
  for (const Var& p : parts) {
    const Matrix& v = p.value();
    if (axis == 0) {
      out.middleRows(offset, v.rows()) = v;
      offset += v.rows();
    } else {
      out.middleCols(offset, v.cols()) = v;
      offset += v.cols();
    }
  }
  std::vector<Var> ins(parts.begin(), parts.end());
  return t.record(std::move(out), needGrad, [ins, axis](Tape& tp, int self) {
    const Matrix& g      = tp.gradOf(self);
    Eigen::Index  offset = 0;
    for (const Var& p : ins) {
      const Matrix& v = tp.valueOf(p.id);
      if (axis == 0) {
        tp.accumulate(p.id, g.middleRows(offset, v.rows()));
        offset += v.rows();
      } else {
        tp.accumulate(p.id, g.middleCols(offset, v.cols()));
        offset += v.cols();
      }
    }
  });
}

Var gatherRows(Var a, std::span<const int> rows) {
  const Matrix& x = a.value();
  Matrix        out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= x.rows()) throw ShapeMismatch("gatherRows: row index out of range for " + shapeOf(x));
    out.row(static_cast<Eigen::Index>(k)) = x.row(rows[k]);
  }
  std::vector<int> idx(rows.begin(), rows.end());
  Tape&            t = *a.tape;
  return t.record(std::move(out), anyGrad(t, a), [a, idx](Tape& tp, int self) {
    const Matrix& xv = tp.valueOf(a.id);
    const Matrix& g  = tp.gradOf(self);
    Matrix        ga = Matrix::Zero(xv.rows(), xv.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) ga.row(idx[k]) += g.row(static_cast<Eigen::Index>(k));
    tp.accumulate(a.id, ga);
  });
}

Var scatterAddRows(Var a, std::span<const int> rows, Eigen::Index outRows) {
  const Matrix& x = a.value();
  if (static_cast<Eigen::Index>(rows.size()) != x.rows()) {
    throw ShapeMismatch("scatterAddRows: " + std::to_string(rows.size()) + " indices for " + shapeOf(x));
  }
  Matrix out = Matrix::Zero(outRows, x.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= outRows) throw ShapeMismatch("scatterAddRows: target row out of range");
    out.row(rows[k]) += x.row(static_cast<Eigen::Index>(k));
  }
  std::vector<int> idx(rows.begin(), rows.end());
  Tape&            t = *a.tape;
  return t.record(std::move(out), anyGrad(t, a), [a, idx](Tape& tp, int self) {
    const Matrix& g = tp.gradOf(self);
    Matrix        ga(static_cast<Eigen::Index>(idx.size()), g.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) ga.row(static_cast<Eigen::Index>(k)) = g.row(idx[k]);
    tp.accumulate(a.id, ga);
  });
}

Var l2NormalizeRows(Var a) {
  const Matrix& x     = a.value();
  Vector        norms = x.rowwise().norm();
  if ((norms.array() == 0.0).any()) throw ZeroNorm("l2NormalizeRows: zero row");
  Matrix out = x.array().colwise() / norms.array();
  Tape&  t   = *a.tape;
  return t.record(std::move(out), anyGrad(t, a), [a, norms](Tape& tp, int self) {
    // d(x/|x|) = (g - y (y.g)) / |x|
    const Matrix& y   = tp.valueOf(self);
    const Matrix& g   = tp.gradOf(self);
    const Vector  dot = y.cwiseProduct(g).rowwise().sum();
    Matrix        ga  = g - (y.array().colwise() * dot.array()).matrix();
    ga                = ga.array().colwise() / norms.array();
    tp.accumulate(a.id, ga);
  });
}

Var mulConstant(Var a, const Matrix& c) {
  const Matrix& x = a.value();
  if (x.rows() != c.rows() || x.cols() != c.cols()) mismatch("mulConstant", x, c);
  Matrix out = x.cwiseProduct(c);
  Tape&  t   = *a.tape;
  return t.record(std::move(out), anyGrad(t, a),
                  [a, c](Tape& tp, int self) { tp.accumulate(a.id, tp.gradOf(self).cwiseProduct(c)); });
}

namespace {

double evaluate(const TapeFunction& f, const std::vector<Matrix>& point) {
  Tape             t;
  std::vector<Var> vars;
  vars.reserve(point.size());
  for (const Matrix& m : point) vars.push_back(t.constant(m));
  return f(t, vars).scalar();
}

}  // namespace

GradCheckReport gradCheck(const TapeFunction& f, const std::vector<Matrix>& point, const GradCheckOptions& options) {
  std::vector<Matrix> analytic;
  {
    Tape             t;
    std::vector<Var> vars;
    for (const Matrix& m : point) vars.push_back(t.variable(m));
    const Var out = f(t, vars);
    t.backward(out);
    for (const Var& v : vars) analytic.push_back(t.grad(v));
  }

  std::vector<GradCheckCoordinate> coords;
  for (std::size_t i = 0; i < point.size(); ++i)
    for (Eigen::Index r = 0; r < point[i].rows(); ++r)
      for (Eigen::Index c = 0; c < point[i].cols(); ++c) coords.push_back({i, r, c});
  if (options.maxCoordinates > 0 && coords.size() > options.maxCoordinates) {
    Rng rng(options.seed);
    rng.shuffle(std::span<GradCheckCoordinate>(coords));
    coords.resize(options.maxCoordinates);
  }

  const double        h = options.epsilon;
  const double        f0 = evaluate(f, point);
  std::vector<double> numeric(coords.size()), exact(coords.size());
  std::vector<bool>   smooth(coords.size(), true);
  GradCheckReport     report;
  std::vector<Matrix> work = point;
  for (std::size_t k = 0; k < coords.size(); ++k) {
    const auto& co   = coords[k];
    double&     x    = work[co.input](co.row, co.col);
    const double x0  = x;
    x                = x0 + h;
    const double fp  = evaluate(f, work);
    x                = x0 - h;
    const double fm  = evaluate(f, work);
    x                = x0;
    const double fwd = (fp - f0) / h;
    const double bwd = (f0 - fm) / h;
    numeric[k]       = (fp - fm) / (2 * h);
    exact[k]         = analytic[co.input](co.row, co.col);
    const double scaleOf = std::max({std::abs(fwd), std::abs(bwd), 1e-6});
    if (std::abs(fwd - bwd) > options.kinkThreshold * scaleOf + 1e4 * h) {
      smooth[k] = false;
      report.nonSmooth.push_back(co);
    }
  }
  double largest = 0.0;
  for (std::size_t k = 0; k < coords.size(); ++k)
    if (smooth[k]) largest = std::max(largest, std::abs(numeric[k]));
  const double floor = 1e-3 * largest + 1e-12;
  for (std::size_t k = 0; k < coords.size(); ++k) {
    if (!smooth[k]) continue;
    const double denom = std::max({std::abs(exact[k]), std::abs(numeric[k]), floor});
    report.maxRelativeError = std::max(report.maxRelativeError, std::abs(exact[k] - numeric[k]) / denom);
    ++report.checked;
  }
  report.passed = report.maxRelativeError <= options.tolerance;
  return report;
}

}  // namespace topocl::ad
