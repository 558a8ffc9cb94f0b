// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace topocl {

//! splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

//! Order-dependent combination of a running hash with one value.
constexpr std::uint64_t hashCombine(std::uint64_t h, std::uint64_t v) {
  return mix64(h ^ (v + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2)));
}

}  // namespace topocl
