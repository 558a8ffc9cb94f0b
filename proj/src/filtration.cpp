// SPDX-License-Identifier: Apache-2.0

#include "topocl/filtration.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "topocl/error.h"
#include "topocl/io_util.h"
#include "topocl/linalg.h"

namespace topocl {

std::string FilterKind::tag() const {
  switch (type) {
    case Type::AtomicNumber:
      return "atom";
    case Type::Degree:
      return "degree";
    case Type::HeatKernelSignature:
    {
      // Shortest round-trip form so the default reads "hks0.1".
      char       buf[32];
      const auto res = std::to_chars(buf, buf + sizeof buf, temperature);
      return "hks" + std::string(buf, res.ptr);
    }
  }
  return "atom";
}

FilterKind filterKindFromName(std::string_view name) {
  if (name == "atom" || name == "atomic_number") return FilterKind::atomicNumber();
  if (name == "degree") return FilterKind::degree();
  if (name == "hks") return FilterKind::heatKernel();
  if (name.substr(0, 4) == "hks:") {
    double t = 0.0;
    if (!parseDouble(name.substr(4), t) || !(t > 0.0)) {
      throw InvalidArgument("heat kernel temperature must be a positive number in '" + std::string(name) + "'");
    }
    return FilterKind::heatKernel(t);
  }
  throw InvalidArgument("unknown filter '" + std::string(name) + "' (expected atom, degree, hks or hks:<t>)");
}

std::vector<double> heatKernelSignature(const MolGraph& graph, double temperature) {
  if (!(temperature > 0.0)) {
    throw InvalidArgument("heat kernel temperature must be positive");
  }
  const int n = graph.numAtoms();
  Matrix    laplacian = Matrix::Zero(n, n);
  for (const Bond& b : graph.bonds()) {
    laplacian(b.u, b.v) -= 1.0;
    laplacian(b.v, b.u) -= 1.0;
    laplacian(b.u, b.u) += 1.0;
    laplacian(b.v, b.v) += 1.0;
  }
  const SymmetricEigen eig = jacobiEigen(laplacian);
  std::vector<double>  hks(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    const double decay = std::exp(-temperature * eig.values[static_cast<std::size_t>(i)]);
    for (int v = 0; v < n; ++v) {
      const double phi = eig.vectors(v, i);
      hks[static_cast<std::size_t>(v)] += decay * phi * phi;
    }
  }
  return hks;
}

std::vector<double> nodeFilter(const MolGraph& graph, FilterKind kind) {
  switch (kind.type) {
    case FilterKind::Type::AtomicNumber: {
      std::vector<double> out;
      out.reserve(graph.atoms().size());
      for (const Atom& a : graph.atoms()) out.push_back(static_cast<double>(a.atomicNumber));
      return out;
    }
    case FilterKind::Type::Degree: {
      const auto          deg = graph.degrees();
      return std::vector<double>(deg.begin(), deg.end());
    }
    case FilterKind::Type::HeatKernelSignature:
      return heatKernelSignature(graph, kind.temperature);
  }
  return {};
}

FilteredComplex::FilteredComplex(int numVertices, std::vector<Simplex> ordered, std::vector<double> nodeValues)
    : numVertices_(numVertices), simplices_(std::move(ordered)), nodeValues_(std::move(nodeValues)) {}

std::vector<int> FilteredComplex::sublevelSet(double threshold) const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(simplices_.size()); ++i) {
    if (simplices_[static_cast<std::size_t>(i)].value <= threshold) out.push_back(i);
  }
  return out;
}

FilteredComplex buildSublevelComplex(const MolGraph& graph, const std::vector<double>& nodeValues) {
  if (static_cast<int>(nodeValues.size()) != graph.numAtoms()) {
    throw InvalidArgument("expected " + std::to_string(graph.numAtoms()) + " node values, got " +
                          std::to_string(nodeValues.size()));
  }
  std::vector<Simplex> simplices;
  simplices.reserve(static_cast<std::size_t>(graph.numAtoms() + graph.numBonds()));
  for (int v = 0; v < graph.numAtoms(); ++v) {
    simplices.push_back({0, v, v, v, nodeValues[static_cast<std::size_t>(v)]});
  }
  for (int e = 0; e < graph.numBonds(); ++e) {
    const Bond& b = graph.bonds()[static_cast<std::size_t>(e)];
    simplices.push_back(
        {1, e, b.u, b.v, std::max(nodeValues[static_cast<std::size_t>(b.u)], nodeValues[static_cast<std::size_t>(b.v)])});
  }
  std::stable_sort(simplices.begin(), simplices.end(), [](const Simplex& a, const Simplex& b) {
    if (a.value != b.value) return a.value < b.value;
    if (a.dim != b.dim) return a.dim < b.dim;
    return a.index < b.index;
  });
  return FilteredComplex(graph.numAtoms(), std::move(simplices), nodeValues);
}

}  // namespace topocl
