// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace topocl {

//! Runs fn(i) for i in [0, n) on `jobs` threads (0 = hardware concurrency). Each index is visited
//! exactly once; results must be written to per-index slots. The first exception is rethrown after
//! all workers stop.
void parallelFor(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn);

unsigned defaultJobs();

}  // namespace topocl
