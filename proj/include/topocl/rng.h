// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace topocl {

//! Seeded generator whose derived draws (bounded ints, uniforms, normals, shuffles) are fully
//! specified here, so sequences do not depend on the standard library's distribution classes.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  //! Uniform integer in [0, n); n must be positive.
  std::uint64_t uniformInt(std::uint64_t n) {
    // Rejection sampling keeps the draw unbiased.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t       x     = engine_();
    while (x >= limit) {
      x = engine_();
    }
    return x % n;
  }

  //! Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  //! Standard normal via Box-Muller.
  double normal();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniformInt(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool            hasSpare_ = false;
  double          spare_    = 0.0;
};

//! Deterministic 64-bit mixing of a seed with a stream identifier, for deriving child seeds.
std::uint64_t deriveSeed(std::uint64_t seed, std::uint64_t stream);

}  // namespace topocl
