// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>

namespace topocl {

constexpr int kMaxAtomicNumber = 118;

//! Atomic number for a capitalized element symbol ("C", "Cl", "Og"); 0 if unknown.
int atomicNumberFromSymbol(std::string_view symbol);

//! Element symbol for an atomic number in [1, 118]; empty view otherwise.
std::string_view elementSymbol(int atomicNumber);

}  // namespace topocl
