// SPDX-License-Identifier: Apache-2.0

#include "topocl/persistence.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <unordered_map>

#include "topocl/io_util.h"
#include "topocl/linalg.h"

namespace topocl {

std::string_view pointKindName(PointKind kind) {
  switch (kind) {
    case PointKind::Ordinary:
      return "Ordinary";
    case PointKind::Essential0Extended:
      return "Essential0Extended";
    case PointKind::Cycle1Extended:
      return "Cycle1Extended";
  }
  return "Ordinary";
}

std::size_t PersistenceDiagram::count(PointKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(points.begin(), points.end(), [&](const PersistencePoint& p) { return p.kind == kind; }));
}

std::vector<PersistencePoint> PersistenceDiagram::ofKind(PointKind kind) const {
  std::vector<PersistencePoint> out;
  for (const auto& p : points) {
    if (p.kind == kind) out.push_back(p);
  }
  return out;
}

std::vector<PersistencePoint> PersistenceDiagram::sorted() const {
  std::vector<PersistencePoint> out = points;
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

using Column = std::vector<int>;  // sorted row indices, GF(2)

void addColumn(Column& target, const Column& source) {
  Column out;
  out.reserve(target.size() + source.size());
  std::set_symmetric_difference(target.begin(), target.end(), source.begin(), source.end(), std::back_inserter(out));
  target.swap(out);
}

//! Descending-pass order over the coned simplices: cone*vertex (dim 1) at f(v), cone*edge (dim 2)
//! at min of endpoints, sorted by (-value, dim, index).
struct ConedSimplex {
  int    dim;
  int    index;  // node or bond index
  double value;
};

std::vector<ConedSimplex> descendingOrder(const FilteredComplex& complex) {
  const auto&               values = complex.nodeValues();
  std::vector<ConedSimplex> out;
  for (const Simplex& s : complex.simplices()) {
    if (s.dim == 0) {
      out.push_back({1, s.index, values[static_cast<std::size_t>(s.index)]});
    } else {
      out.push_back({2, s.index, std::min(values[static_cast<std::size_t>(s.v0)], values[static_cast<std::size_t>(s.v1)])});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const ConedSimplex& a, const ConedSimplex& b) {
    if (a.value != b.value) return a.value > b.value;
    if (a.dim != b.dim) return a.dim < b.dim;
    return a.index < b.index;
  });
  return out;
}

class UnionFind {
 public:
  //! `age[i]` orders elements: lower age = older; the older root survives a union.
  explicit UnionFind(std::vector<int> age) : parent_(age.size()), age_(std::move(age)) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  int find(int x) {
    while (parent_[static_cast<std::size_t>(x)] != x) {
      auto& p = parent_[static_cast<std::size_t>(x)];
      p       = parent_[static_cast<std::size_t>(p)];
      x       = p;
    }
    return x;
  }

  //! Merges two distinct roots and returns the younger one (which stops being a root).
  int unite(int ra, int rb) {
    const int older   = age_[static_cast<std::size_t>(ra)] < age_[static_cast<std::size_t>(rb)] ? ra : rb;
    const int younger = older == ra ? rb : ra;
    parent_[static_cast<std::size_t>(younger)] = older;
    return younger;
  }

 private:
  std::vector<int> parent_;
  std::vector<int> age_;
};

}  // namespace

PersistenceDiagram extendedPersistenceOracle(const FilteredComplex& complex) {
  const auto& asc   = complex.simplices();
  const int   nAsc  = static_cast<int>(asc.size());
  const auto  desc  = descendingOrder(complex);
  const int   total = 1 + nAsc + static_cast<int>(desc.size());

  // Row positions of vertices / edges in the ascending block and of coned simplices in the descending block.
  std::vector<int> vertexPos(static_cast<std::size_t>(complex.numVertices()));
  std::vector<int> edgePos(static_cast<std::size_t>(complex.numEdges()));
  std::vector<int> edgeV0(edgePos.size()), edgeV1(edgePos.size());
  for (int p = 0; p < nAsc; ++p) {
    const Simplex& s = asc[static_cast<std::size_t>(p)];
    if (s.dim == 0) {
      vertexPos[static_cast<std::size_t>(s.index)] = 1 + p;
    } else {
      edgePos[static_cast<std::size_t>(s.index)] = 1 + p;
      edgeV0[static_cast<std::size_t>(s.index)]  = s.v0;
      edgeV1[static_cast<std::size_t>(s.index)]  = s.v1;
    }
  }
  std::vector<int> conedVertexPos(vertexPos.size());
  for (std::size_t k = 0; k < desc.size(); ++k) {
    if (desc[k].dim == 1) conedVertexPos[static_cast<std::size_t>(desc[k].index)] = 1 + nAsc + static_cast<int>(k);
  }

  std::vector<Column> columns(static_cast<std::size_t>(total));
  std::vector<double> value(static_cast<std::size_t>(total), 0.0);
  std::vector<int>    dim(static_cast<std::size_t>(total), 0);
  for (int p = 0; p < nAsc; ++p) {
    const Simplex& s   = asc[static_cast<std::size_t>(p)];
    const auto     col = static_cast<std::size_t>(1 + p);
    value[col]         = s.value;
    dim[col]           = s.dim;
    if (s.dim == 1) {
      columns[col] = {vertexPos[static_cast<std::size_t>(s.v0)], vertexPos[static_cast<std::size_t>(s.v1)]};
      std::sort(columns[col].begin(), columns[col].end());
    }
  }
  for (std::size_t k = 0; k < desc.size(); ++k) {
    const auto col = static_cast<std::size_t>(1 + nAsc) + k;
    value[col]     = desc[k].value;
    dim[col]       = desc[k].dim;
    const auto idx = static_cast<std::size_t>(desc[k].index);
    if (desc[k].dim == 1) {
      columns[col] = {0, vertexPos[idx]};
    } else {
      columns[col] = {edgePos[idx], conedVertexPos[static_cast<std::size_t>(edgeV0[idx])],
                      conedVertexPos[static_cast<std::size_t>(edgeV1[idx])]};
    }
    std::sort(columns[col].begin(), columns[col].end());
  }

  std::unordered_map<int, int> pivotOwner;
  PersistenceDiagram           out;
  for (int j = 0; j < total; ++j) {
    Column& col = columns[static_cast<std::size_t>(j)];
    while (!col.empty()) {
      const auto it = pivotOwner.find(col.back());
      if (it == pivotOwner.end()) break;
      addColumn(col, columns[static_cast<std::size_t>(it->second)]);
    }
    if (col.empty()) continue;
    const int creator = col.back();
    pivotOwner.emplace(creator, j);
    const bool creatorAscending = creator >= 1 && creator <= nAsc;
    const bool killerAscending  = j <= nAsc;
    if (!creatorAscending) continue;  // relative pair or cone vertex
    const double birth = value[static_cast<std::size_t>(creator)];
    const double death = value[static_cast<std::size_t>(j)];
    const int    cdim  = dim[static_cast<std::size_t>(creator)];
    if (killerAscending) {
      out.points.push_back({birth, death, 0, PointKind::Ordinary});
    } else if (cdim == 0) {
      out.points.push_back({birth, death, 0, PointKind::Essential0Extended});
    } else {
      out.points.push_back({birth, death, 1, PointKind::Cycle1Extended});
    }
  }
  return out;
}

PersistenceDiagram extendedPersistenceFast(const FilteredComplex& complex) {
  const auto& asc         = complex.simplices();
  const auto& values      = complex.nodeValues();
  const int   numVertices = complex.numVertices();
  const int   numEdges    = complex.numEdges();

  PersistenceDiagram out;

  // Ascending pass: elder rule over sublevel order.
  std::vector<int> ascPos(static_cast<std::size_t>(numVertices));
  std::vector<int> edgeAscPos(static_cast<std::size_t>(numEdges));
  std::vector<int> edgeV0(static_cast<std::size_t>(numEdges)), edgeV1(static_cast<std::size_t>(numEdges));
  for (int p = 0; p < static_cast<int>(asc.size()); ++p) {
    const Simplex& s = asc[static_cast<std::size_t>(p)];
    if (s.dim == 0) {
      ascPos[static_cast<std::size_t>(s.index)] = p;
    } else {
      edgeAscPos[static_cast<std::size_t>(s.index)] = p;
      edgeV0[static_cast<std::size_t>(s.index)]     = s.v0;
      edgeV1[static_cast<std::size_t>(s.index)]     = s.v1;
    }
  }
  UnionFind sub(ascPos);
  for (const Simplex& s : asc) {
    if (s.dim != 1) continue;
    const int ra = sub.find(s.v0);
    const int rb = sub.find(s.v1);
    if (ra == rb) continue;
    const int younger = sub.unite(ra, rb);
    out.points.push_back({values[static_cast<std::size_t>(younger)], s.value, 0, PointKind::Ordinary});
  }
  std::vector<double> compMax(static_cast<std::size_t>(numVertices), -std::numeric_limits<double>::infinity());
  for (int v = 0; v < numVertices; ++v) {
    auto& m = compMax[static_cast<std::size_t>(sub.find(v))];
    m       = std::max(m, values[static_cast<std::size_t>(v)]);
  }
  for (int v = 0; v < numVertices; ++v) {
    if (sub.find(v) == v) {
      out.points.push_back(
          {values[static_cast<std::size_t>(v)], compMax[static_cast<std::size_t>(v)], 0, PointKind::Essential0Extended});
    }
  }
  if (numEdges == 0) return out;

  // Descending pass: edges that close a cycle in the superlevel graph kill one ascending cycle each.
  // Their fundamental cycles (over ascending edge positions) are eliminated left to right; the
  // pivot of each reduced cycle is the ascending edge it pairs with.
  const auto                                    desc = descendingOrder(complex);
  std::vector<int>                              descAge(static_cast<std::size_t>(numVertices));
  for (std::size_t k = 0; k < desc.size(); ++k) {
    if (desc[k].dim == 1) descAge[static_cast<std::size_t>(desc[k].index)] = static_cast<int>(k);
  }
  UnionFind                                     super(descAge);
  std::vector<std::vector<std::pair<int, int>>> forest(static_cast<std::size_t>(numVertices));
  std::unordered_map<int, Column>               pivots;

  auto treePath = [&](int from, int to) {
    // BFS in the current spanning forest; returns ascending positions of the path edges.
    std::vector<int> prevVertex(static_cast<std::size_t>(numVertices), -1);
    std::vector<int> prevEdge(static_cast<std::size_t>(numVertices), -1);
    std::queue<int>  queue;
    queue.push(from);
    prevVertex[static_cast<std::size_t>(from)] = from;
    while (!queue.empty()) {
      const int x = queue.front();
      queue.pop();
      if (x == to) break;
      for (const auto& [y, e] : forest[static_cast<std::size_t>(x)]) {
        if (prevVertex[static_cast<std::size_t>(y)] < 0) {
          prevVertex[static_cast<std::size_t>(y)] = x;
          prevEdge[static_cast<std::size_t>(y)]   = e;
          queue.push(y);
        }
      }
    }
    Column path;
    for (int x = to; x != from; x = prevVertex[static_cast<std::size_t>(x)]) {
      path.push_back(edgeAscPos[static_cast<std::size_t>(prevEdge[static_cast<std::size_t>(x)])]);
    }
    std::sort(path.begin(), path.end());
    return path;
  };

  for (const ConedSimplex& c : desc) {
    if (c.dim != 2) continue;
    const int u  = edgeV0[static_cast<std::size_t>(c.index)];
    const int v  = edgeV1[static_cast<std::size_t>(c.index)];
    const int ru = super.find(u);
    const int rv = super.find(v);
    if (ru != rv) {
      super.unite(ru, rv);
      forest[static_cast<std::size_t>(u)].emplace_back(v, c.index);
      forest[static_cast<std::size_t>(v)].emplace_back(u, c.index);
      continue;
    }
    Column cycle = treePath(u, v);
    addColumn(cycle, Column{edgeAscPos[static_cast<std::size_t>(c.index)]});
    while (!cycle.empty()) {
      const auto it = pivots.find(cycle.back());
      if (it == pivots.end()) break;
      addColumn(cycle, it->second);
    }
    if (cycle.empty()) continue;  // cannot happen for a cycle-closing edge
    const int creator = cycle.back();
    out.points.push_back({asc[static_cast<std::size_t>(creator)].value, c.value, 1, PointKind::Cycle1Extended});
    pivots.emplace(creator, std::move(cycle));
  }
  return out;
}

PersistenceDiagram computeDiagram(const MolGraph& graph, FilterKind kind) {
  PersistenceDiagram d = extendedPersistenceFast(buildSublevelComplex(graph, nodeFilter(graph, kind)));
  d.filterTag          = kind.tag();
  return d;
}

namespace {

double linf(const PersistencePoint& a, const PersistencePoint& b) {
  return std::max(std::abs(a.birth - b.birth), std::abs(a.death - b.death));
}

std::vector<PersistencePoint> offDiagonal(std::span<const PersistencePoint> pts) {
  std::vector<PersistencePoint> out;
  for (const auto& p : pts) {
    if (p.birth != p.death) out.push_back(p);
  }
  return out;
}

Matrix augmentedCost(const std::vector<PersistencePoint>& a, const std::vector<PersistencePoint>& b) {
  if (a.size() > kMaxDistancePoints || b.size() > kMaxDistancePoints) {
    throw SizeLimit("diagram distance limited to " + std::to_string(kMaxDistancePoints) + " points per diagram");
  }
  const auto n    = static_cast<Eigen::Index>(a.size());
  const auto m    = static_cast<Eigen::Index>(b.size());
  Matrix     cost = Matrix::Zero(n + m, n + m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) cost(i, j) = linf(a[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(j)]);
    for (Eigen::Index j = m; j < n + m; ++j) cost(i, j) = a[static_cast<std::size_t>(i)].persistence() / 2.0;
  }
  for (Eigen::Index i = n; i < n + m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) cost(i, j) = b[static_cast<std::size_t>(j)].persistence() / 2.0;
  }
  return cost;
}

//! Minimum-cost perfect assignment (shortest augmenting paths with potentials). Returns row -> column.
std::vector<int> hungarian(const Matrix& cost) {
  const int                 n   = static_cast<int>(cost.rows());
  const double              inf = std::numeric_limits<double>::infinity();
  std::vector<double>       u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<int>          match(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
  for (int i = 1; i <= n; ++i) {
    match[0]       = i;
    int    j0      = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
    std::vector<char>   used(static_cast<std::size_t>(n + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0    = match[static_cast<std::size_t>(j0)];
      double    delta = inf;
      int       j1    = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)]  = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1    = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1                         = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)]  = match[static_cast<std::size_t>(j1)];
      j0                                   = j1;
    } while (j0 != 0);
  }
  std::vector<int> rowToCol(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j) {
    if (match[static_cast<std::size_t>(j)] > 0) rowToCol[static_cast<std::size_t>(match[static_cast<std::size_t>(j)] - 1)] = j - 1;
  }
  return rowToCol;
}

//! Kuhn's augmenting-path test for a perfect matching using only entries <= threshold.
bool perfectMatchingWithin(const Matrix& cost, double threshold) {
  const int        n = static_cast<int>(cost.rows());
  std::vector<int> colOwner(static_cast<std::size_t>(n), -1);
  std::vector<char> visited;
  std::function<bool(int)> augment = [&](int row) {
    for (int col = 0; col < n; ++col) {
      if (cost(row, col) > threshold || visited[static_cast<std::size_t>(col)]) continue;
      visited[static_cast<std::size_t>(col)] = 1;
      if (colOwner[static_cast<std::size_t>(col)] < 0 || augment(colOwner[static_cast<std::size_t>(col)])) {
        colOwner[static_cast<std::size_t>(col)] = row;
        return true;
      }
    }
    return false;
  };
  for (int row = 0; row < n; ++row) {
    visited.assign(static_cast<std::size_t>(n), 0);
    if (!augment(row)) return false;
  }
  return true;
}

}  // namespace

double diagramW1(std::span<const PersistencePoint> a, std::span<const PersistencePoint> b) {
  const auto pa = offDiagonal(a);
  const auto pb = offDiagonal(b);
  if (pa.empty() && pb.empty()) return 0.0;
  const Matrix cost  = augmentedCost(pa, pb);
  const auto   match = hungarian(cost);
  double       total = 0.0;
  for (std::size_t i = 0; i < match.size(); ++i) total += cost(static_cast<Eigen::Index>(i), match[i]);
  return total;
}

double diagramBottleneck(std::span<const PersistencePoint> a, std::span<const PersistencePoint> b) {
  const auto pa = offDiagonal(a);
  const auto pb = offDiagonal(b);
  if (pa.empty() && pb.empty()) return 0.0;
  const Matrix        cost = augmentedCost(pa, pb);
  std::vector<double> candidates(cost.data(), cost.data() + cost.size());
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  std::size_t lo = 0;
  std::size_t hi = candidates.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (perfectMatchingWithin(cost, candidates[mid])) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return candidates[lo];
}

double diagramW1(const PersistenceDiagram& a, const PersistenceDiagram& b) {
  double total = 0.0;
  for (const PointKind kind : kPointKinds) {
    const auto pa = a.ofKind(kind);
    const auto pb = b.ofKind(kind);
    total += diagramW1(std::span<const PersistencePoint>(pa), std::span<const PersistencePoint>(pb));
  }
  return total;
}

std::string diagramToCsv(const PersistenceDiagram& diagram) {
  std::string out = "dim,kind,birth,death\n";
  for (const auto& p : diagram.points) {
    out += std::to_string(p.dim) + "," + std::string(pointKindName(p.kind)) + "," + formatDouble(p.birth) + "," +
           formatDouble(p.death) + "\n";
  }
  return out;
}

}  // namespace topocl
