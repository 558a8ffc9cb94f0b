// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "topocl/linalg.h"

namespace topocl {

struct AdamConfig {
  double learningRate = 1e-3;
  double beta1        = 0.9;
  double beta2        = 0.999;
  double epsilon      = 1e-8;
};

//! Adam with bias-corrected moments: p -= lr * mhat / (sqrt(vhat) + eps). Moment buffers are
//! created on the first step and keep the shapes of the parameters.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  //! Updates params[i] for every i with mask[i] set (all when the mask is empty). Masked-out
  //! parameters keep their moments untouched.
  void step(std::vector<Matrix>& params, const std::vector<Matrix>& grads, const std::vector<bool>& mask = {});

  std::int64_t      steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig          config_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::int64_t        steps_ = 0;
};

}  // namespace topocl
