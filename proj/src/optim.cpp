// SPDX-License-Identifier: Apache-2.0

#include "topocl/optim.h"

#include <cmath>

#include "topocl/error.h"

namespace topocl {

void Adam::step(std::vector<Matrix>& params, const std::vector<Matrix>& grads, const std::vector<bool>& mask) {
  if (grads.size() != params.size()) throw LengthMismatch("Adam: gradient count differs from parameter count");
  if (!mask.empty() && mask.size() != params.size()) throw LengthMismatch("Adam: mask size differs from parameter count");
  if (m_.empty()) {
    for (const Matrix& p : params) {
      m_.push_back(Matrix::Zero(p.rows(), p.cols()));
      v_.push_back(Matrix::Zero(p.rows(), p.cols()));
    }
  }
  if (m_.size() != params.size()) throw LengthMismatch("Adam: parameter count changed between steps");
  ++steps_;
  const double t  = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    if (grads[i].rows() != params[i].rows() || grads[i].cols() != params[i].cols()) {
      throw LengthMismatch("Adam: gradient shape differs from parameter shape");
    }
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grads[i];
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grads[i].cwiseProduct(grads[i]);
    const auto mhat = m_[i].array() / c1;
    const auto vhat = v_[i].array() / c2;
    params[i].array() -= config_.learningRate * mhat / (vhat.sqrt() + config_.epsilon);
  }
}

}  // namespace topocl
