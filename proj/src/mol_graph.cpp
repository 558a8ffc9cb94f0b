// SPDX-License-Identifier: Apache-2.0

#include "topocl/mol_graph.h"

#include <algorithm>
#include <numeric>
#include <set>

#include "topocl/elements.h"
#include "topocl/error.h"

namespace topocl {

std::string_view bondTypeName(BondType type) {
  switch (type) {
    case BondType::Single:
      return "single";
    case BondType::Double:
      return "double";
    case BondType::Triple:
      return "triple";
    case BondType::Aromatic:
      return "aromatic";
  }
  return "single";
}

std::optional<BondType> bondTypeFromName(std::string_view name) {
  if (name == "single") return BondType::Single;
  if (name == "double") return BondType::Double;
  if (name == "triple") return BondType::Triple;
  if (name == "aromatic") return BondType::Aromatic;
  return std::nullopt;
}

int MolGraph::addAtom(int atomicNumber) {
  if (atomicNumber < 1 || atomicNumber > kMaxAtomicNumber) {
    throw InvalidArgument("atomic number " + std::to_string(atomicNumber) + " outside [1, 118]");
  }
  const int idx = numAtoms();
  atoms_.push_back(Atom{atomicNumber, idx});
  return idx;
}

void MolGraph::addBond(int u, int v, BondType type) {
  if (u < 0 || v < 0 || u >= numAtoms() || v >= numAtoms()) {
    throw InvalidArgument("bond (" + std::to_string(u) + ", " + std::to_string(v) + ") references a missing atom");
  }
  if (u == v) {
    throw InvalidArgument("self-loop on atom " + std::to_string(u));
  }
  if (hasBond(u, v)) {
    throw InvalidArgument("duplicate bond (" + std::to_string(u) + ", " + std::to_string(v) + ")");
  }
  bonds_.push_back(Bond{u, v, type});
}

bool MolGraph::hasBond(int u, int v) const {
  return std::any_of(bonds_.begin(), bonds_.end(), [&](const Bond& b) {
    return (b.u == u && b.v == v) || (b.u == v && b.v == u);
  });
}

std::vector<int> MolGraph::degrees() const {
  std::vector<int> deg(atoms_.size(), 0);
  for (const Bond& b : bonds_) {
    ++deg[static_cast<std::size_t>(b.u)];
    ++deg[static_cast<std::size_t>(b.v)];
  }
  return deg;
}

std::vector<std::vector<std::pair<int, int>>> MolGraph::adjacency() const {
  std::vector<std::vector<std::pair<int, int>>> adj(atoms_.size());
  for (int i = 0; i < numBonds(); ++i) {
    const Bond& b = bonds_[static_cast<std::size_t>(i)];
    adj[static_cast<std::size_t>(b.u)].emplace_back(b.v, i);
    adj[static_cast<std::size_t>(b.v)].emplace_back(b.u, i);
  }
  return adj;
}

int MolGraph::numComponents() const {
  std::vector<int> parent(atoms_.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      x = parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
    }
    return x;
  };
  int components = numAtoms();
  for (const Bond& b : bonds_) {
    const int ru = find(b.u);
    const int rv = find(b.v);
    if (ru != rv) {
      parent[static_cast<std::size_t>(std::max(ru, rv))] = std::min(ru, rv);
      --components;
    }
  }
  return components;
}

void MolGraph::validate() const {
  if (atoms_.empty()) {
    throw InvalidArgument("graph has no atoms");
  }
  for (const Atom& a : atoms_) {
    if (a.atomicNumber < 1 || a.atomicNumber > kMaxAtomicNumber) {
      throw InvalidArgument("atomic number " + std::to_string(a.atomicNumber) + " outside [1, 118]");
    }
  }
  std::set<std::pair<int, int>> seen;
  for (const Bond& b : bonds_) {
    if (b.u < 0 || b.v < 0 || b.u >= numAtoms() || b.v >= numAtoms()) {
      throw InvalidArgument("bond references a missing atom");
    }
    if (b.u == b.v) {
      throw InvalidArgument("self-loop on atom " + std::to_string(b.u));
    }
    if (!seen.emplace(std::min(b.u, b.v), std::max(b.u, b.v)).second) {
      throw InvalidArgument("duplicate bond (" + std::to_string(b.u) + ", " + std::to_string(b.v) + ")");
    }
  }
}

bool MolGraph::operator==(const MolGraph& other) const {
  if (atoms_ != other.atoms_ || name_ != other.name_ || bonds_.size() != other.bonds_.size()) {
    return false;
  }
  // Bonds compare as unordered pairs; bond order in the list is part of the structure.
  for (std::size_t i = 0; i < bonds_.size(); ++i) {
    const Bond& a = bonds_[i];
    const Bond& b = other.bonds_[i];
    const bool  sameEnds = (a.u == b.u && a.v == b.v) || (a.u == b.v && a.v == b.u);
    if (!sameEnds || a.type != b.type) {
      return false;
    }
  }
  return true;
}

}  // namespace topocl
