// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "topocl/error.h"
#include "topocl/filtration.h"

namespace topocl {

enum class PointKind { Ordinary, Essential0Extended, Cycle1Extended };

constexpr PointKind kPointKinds[] = {PointKind::Ordinary, PointKind::Essential0Extended, PointKind::Cycle1Extended};

std::string_view pointKindName(PointKind kind);

//! One extended persistence pair.
//!
//! Ordinary: dim-0 pair of the ascending pass, birth <= death.
//! Essential0Extended: one per connected component, (min, max) of its node values.
//! Cycle1Extended: one per independent cycle; birth is the ascending value of the edge closing the
//! cycle and death the descending value (min endpoint) of the edge coning it off, so death <= birth.
struct PersistencePoint {
  double    birth = 0.0;
  double    death = 0.0;
  int       dim   = 0;
  PointKind kind  = PointKind::Ordinary;

  double persistence() const { return death >= birth ? death - birth : birth - death; }

  auto operator<=>(const PersistencePoint&) const = default;
};

struct PersistenceDiagram {
  std::vector<PersistencePoint> points;
  std::string                   filterTag;

  std::size_t count(PointKind kind) const;
  //! Points of one class, in stored order.
  std::vector<PersistencePoint> ofKind(PointKind kind) const;
  //! Points sorted by (birth, death, dim, kind) ordering of PersistencePoint; used for multiset comparison.
  std::vector<PersistencePoint> sorted() const;
};

//! Exact extended persistence by reducing the GF(2) boundary matrix of the coned complex.
//!
//! Column order: the cone vertex, then the ascending sublevel pass over the complex, then the coned
//! simplices (cone * vertex, cone * edge) by decreasing value with ties broken by (dim, index). A coned
//! vertex enters at its node value and a coned edge at the min of its endpoint values. Pairs inside
//! the ascending block are Ordinary; a vertex paired across the blocks is Essential0Extended; an
//! edge paired across the blocks is Cycle1Extended. Relative pairs within the descending block and
//! the unpaired cone vertex are not reported.
PersistenceDiagram extendedPersistenceOracle(const FilteredComplex& complex);

//! Same multiset as the oracle, computed with union-find for dimension 0 and a small elimination over
//! fundamental cycles of the descending pass for the cycle pairs.
PersistenceDiagram extendedPersistenceFast(const FilteredComplex& complex);

//! Convenience: filter values, complex and fast extended persistence in one call.
PersistenceDiagram computeDiagram(const MolGraph& graph, FilterKind kind);

//! A diagram passed to a distance exceeds the point limit.
class SizeLimit : public Error {
 public:
  using Error::Error;
};

constexpr std::size_t kMaxDistancePoints = 512;

//! 1-Wasserstein distance with L-infinity ground metric between two point sets of the same class.
//! Points may be matched to the diagonal at cost persistence / 2. Exact (Hungarian algorithm on the
//! augmented square cost matrix). Throws SizeLimit beyond kMaxDistancePoints points per diagram.
double diagramW1(std::span<const PersistencePoint> a, std::span<const PersistencePoint> b);

//! Bottleneck analogue: smallest c admitting a perfect matching of the augmented matrix with every
//! used cost <= c.
double diagramBottleneck(std::span<const PersistencePoint> a, std::span<const PersistencePoint> b);

//! Sum of per-class W1 distances over the three point kinds.
double diagramW1(const PersistenceDiagram& a, const PersistenceDiagram& b);

//! CSV dump with header `dim,kind,birth,death`, one row per point in stored order.
std::string diagramToCsv(const PersistenceDiagram& diagram);

}  // namespace topocl
