// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace topocl {

enum class BondType : std::uint8_t { Single = 0, Double = 1, Triple = 2, Aromatic = 3 };

constexpr int kNumBondTypes = 4;

std::string_view bondTypeName(BondType type);
//! Inverse of bondTypeName; returns nullopt for unknown names.
std::optional<BondType> bondTypeFromName(std::string_view name);

struct Atom {
  int atomicNumber = 6;
  //! Position of the atom in its graph (kept equal to the node index).
  int index = 0;

  bool operator==(const Atom&) const = default;
};

struct Bond {
  int      u    = 0;
  int      v    = 0;
  BondType type = BondType::Single;

  bool operator==(const Bond&) const = default;
};

//! Simple undirected molecular graph. Hydrogens are implicit unless written as bracket atoms.
class MolGraph {
 public:
  MolGraph() = default;

  int  addAtom(int atomicNumber);
  //! Adds an undirected bond; throws InvalidArgument on self-loops, duplicates or bad indices.
  void addBond(int u, int v, BondType type);

  int numAtoms() const { return static_cast<int>(atoms_.size()); }
  int numBonds() const { return static_cast<int>(bonds_.size()); }

  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::vector<Bond>& bonds() const { return bonds_; }

  const std::optional<std::string>& name() const { return name_; }
  void                              setName(std::optional<std::string> name) { name_ = std::move(name); }

  bool hasBond(int u, int v) const;
  //! Degree of each atom.
  std::vector<int> degrees() const;
  //! Adjacency lists of (neighbor, bond index).
  std::vector<std::vector<std::pair<int, int>>> adjacency() const;
  //! Number of connected components.
  int numComponents() const;

  //! Throws InvalidArgument when an invariant is broken (empty graph, bad atomic number, self-loop,
  //! duplicate or out-of-range bond).
  void validate() const;

  bool operator==(const MolGraph& other) const;

 private:
  std::vector<Atom>          atoms_;
  std::vector<Bond>          bonds_;
  std::optional<std::string> name_;
};

//! Label value for one task; nullopt means the label is missing.
using Label = std::optional<double>;

struct Record {
  MolGraph           graph;
  std::vector<Label> labels;
  //! Identifier used in fingerprint and embedding files.
  std::string id;
};

struct Dataset {
  std::vector<Record> records;
  int                 taskCount = 0;

  std::size_t size() const { return records.size(); }
};

}  // namespace topocl
