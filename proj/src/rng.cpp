// SPDX-License-Identifier: Apache-2.0

#include "topocl/rng.h"

#include <cmath>
#include <numbers>

#include "topocl/hash.h"

namespace topocl {

double Rng::normal() {
  if (hasSpare_) {
    hasSpare_ = false;
    return spare_;
  }
  double u1 = uniform01();
  while (u1 <= 0.0) {
    u1 = uniform01();
  }
  const double u2 = uniform01();
  const double r  = std::sqrt(-2.0 * std::log(u1));
  const double th = 2.0 * std::numbers::pi * u2;
  spare_          = r * std::sin(th);
  hasSpare_       = true;
  return r * std::cos(th);
}

std::uint64_t deriveSeed(std::uint64_t seed, std::uint64_t stream) {
  return hashCombine(mix64(seed), stream);
}

}  // namespace topocl
