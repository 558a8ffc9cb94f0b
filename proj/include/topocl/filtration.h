// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "topocl/mol_graph.h"

namespace topocl {

//! Which node function drives the sublevel filtration.
struct FilterKind {
  enum class Type { AtomicNumber, Degree, HeatKernelSignature };

  Type   type        = Type::AtomicNumber;
  //! Diffusion time for the heat kernel signature; must be positive.
  double temperature = 0.1;

  static FilterKind atomicNumber() { return {Type::AtomicNumber, 0.1}; }
  static FilterKind degree() { return {Type::Degree, 0.1}; }
  static FilterKind heatKernel(double t = 0.1) { return {Type::HeatKernelSignature, t}; }

  //! Short tag used in file headers and provenance: "atom", "degree", "hks0.1".
  std::string tag() const;

  bool operator==(const FilterKind&) const = default;
};

//! Parses "atom", "degree", "hks" or "hks:<t>".
FilterKind filterKindFromName(std::string_view name);

//! One value per node. Heat kernel signature: h_t(v) = sum_i exp(-t lambda_i) phi_i(v)^2 over the
//! eigenpairs of the combinatorial Laplacian L = D - A (no per-graph normalization).
std::vector<double> nodeFilter(const MolGraph& graph, FilterKind kind);

std::vector<double> heatKernelSignature(const MolGraph& graph, double temperature);

struct Simplex {
  int    dim   = 0;
  //! Original node index (dim 0) or bond index (dim 1).
  int    index = 0;
  //! Endpoints; for vertices v1 == v0.
  int    v0    = 0;
  int    v1    = 0;
  double value = 0.0;
};

//! Nodes and edges of a graph in ascending sublevel order. Edge values are the max of their endpoint
//! values; ties are broken by (dim, original index).
class FilteredComplex {
 public:
  FilteredComplex(int numVertices, std::vector<Simplex> ordered, std::vector<double> nodeValues);

  const std::vector<Simplex>& simplices() const { return simplices_; }
  const std::vector<double>&  nodeValues() const { return nodeValues_; }
  int                         numVertices() const { return numVertices_; }
  int                         numEdges() const { return static_cast<int>(simplices_.size()) - numVertices_; }

  //! Positions (into simplices()) of all simplices with value <= threshold.
  std::vector<int> sublevelSet(double threshold) const;

 private:
  int                  numVertices_;
  std::vector<Simplex> simplices_;
  std::vector<double>  nodeValues_;
};

//! Throws InvalidArgument when nodeValues does not have one entry per node.
FilteredComplex buildSublevelComplex(const MolGraph& graph, const std::vector<double>& nodeValues);

}  // namespace topocl
