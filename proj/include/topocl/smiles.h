// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "topocl/error.h"
#include "topocl/mol_graph.h"

namespace topocl {

//! Parse failure with the byte offset of the offending character.
class SmilesError : public Error {
 public:
  enum class Kind { UnsupportedToken, UnbalancedBranch, DanglingRingClosure, InvalidBond, Empty };

  SmilesError(Kind kind, std::size_t offset, const std::string& message);

  Kind        kind() const { return kind_; }
  std::size_t offset() const { return offset_; }

 private:
  Kind        kind_;
  std::size_t offset_;
};

std::string_view smilesErrorKindName(SmilesError::Kind kind);

//! Parses the supported SMILES subset into a MolGraph.
//!
//! Accepted: organic-subset atoms (B C N O P S F Cl Br I and aromatic b c n o p s), bracket atoms
//! with an element symbol, optional hydrogen count and in-bracket charge, bonds `- = # :`, branches,
//! ring closures `1`-`9` and `%nn`, and `.` between disconnected fragments. Stereo markers,
//! isotopes and atom classes are rejected. An implicit bond between two aromatic atoms is aromatic,
//! otherwise single. Hydrogens never become nodes unless written as `[H]`.
MolGraph parseSmiles(std::string_view text);

}  // namespace topocl
