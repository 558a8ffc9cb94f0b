// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "topocl/mol_graph.h"

namespace topocl {

//! Topological families of generated molecules, by cyclomatic number.
enum class SyntheticFamily { Tree = 0, OneCycle = 1, TwoCycle = 2 };

struct SyntheticConfig {
  int    minAtoms = 6;
  int    maxAtoms = 12;
  //! Probabilities of N and O per heavy atom; the rest are C.
  double nitrogen = 0.15;
  double oxygen   = 0.1;
};

struct SyntheticCorpus {
  std::vector<MolGraph> graphs;
  std::vector<int>      family;
};

//! One connected molecule with exactly `cycles` independent cycles and every degree <= 4. A random
//! tree grows by attaching each new atom to an earlier atom with free valence; cycles close between
//! non-bonded pairs at graph distance >= 2 (ring size >= 3). Bonds are single.
MolGraph syntheticMolecule(int cycles, const SyntheticConfig& config, std::uint64_t seed);

//! `count` molecules cycling through Tree, OneCycle, TwoCycle; molecule i uses deriveSeed(seed, i)
//! and is named "syn<i>".
SyntheticCorpus syntheticCorpus(std::size_t count, std::uint64_t seed, const SyntheticConfig& config = {});

//! Dataset view with one label per record: 1 for trees, 0 otherwise; ids are the graph names.
Dataset syntheticDataset(const SyntheticCorpus& corpus);

}  // namespace topocl
