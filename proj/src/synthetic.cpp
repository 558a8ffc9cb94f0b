// SPDX-License-Identifier: Apache-2.0

#include "topocl/synthetic.h"

#include "topocl/error.h"
#include "topocl/rng.h"

namespace topocl {

namespace {

int maxValence(int z) {
  return z == 8 ? 2 : z == 7 ? 3 : 4;
}

}  // namespace

MolGraph syntheticMolecule(int cycles, const SyntheticConfig& config, std::uint64_t seed) {
  if (cycles < 0) throw InvalidArgument("cycle count must be >= 0");
  if (config.minAtoms < 1 || config.maxAtoms < config.minAtoms) throw InvalidArgument("bad atom count range");
  for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
    Rng       rng(deriveSeed(seed, attempt));
    const int n = config.minAtoms + static_cast<int>(rng.uniformInt(static_cast<std::uint64_t>(config.maxAtoms - config.minAtoms + 1)));
    MolGraph  g;
    for (int i = 0; i < n; ++i) {
      const double u = rng.uniform01();
      g.addAtom(u < config.nitrogen ? 7 : u < config.nitrogen + config.oxygen ? 8 : 6);
    }
    std::vector<int> degree(static_cast<std::size_t>(n), 0);
    auto             free = [&](int v) { return degree[static_cast<std::size_t>(v)] < maxValence(g.atoms()[static_cast<std::size_t>(v)].atomicNumber); };
    bool             ok   = true;
    for (int v = 1; v < n && ok; ++v) {
      std::vector<int> parents;
      for (int u = 0; u < v; ++u)
        if (free(u)) parents.push_back(u);
      if (parents.empty()) {
        ok = false;
        break;
      }
      const int u = parents[static_cast<std::size_t>(rng.uniformInt(parents.size()))];
      g.addBond(u, v, BondType::Single);
      ++degree[static_cast<std::size_t>(u)];
      ++degree[static_cast<std::size_t>(v)];
    }
    for (int c = 0; c < cycles && ok; ++c) {
      std::vector<std::pair<int, int>> candidates;
      for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v)
          if (free(u) && free(v) && !g.hasBond(u, v)) candidates.emplace_back(u, v);
      if (candidates.empty()) {
        ok = false;
        break;
      }
      const auto [u, v] = candidates[static_cast<std::size_t>(rng.uniformInt(candidates.size()))];
      g.addBond(u, v, BondType::Single);
      ++degree[static_cast<std::size_t>(u)];
      ++degree[static_cast<std::size_t>(v)];
    }
    if (ok) return g;
  }
  throw InvalidArgument("could not place " + std::to_string(cycles) + " cycles within the atom range");
}

SyntheticCorpus syntheticCorpus(std::size_t count, std::uint64_t seed, const SyntheticConfig& config) {
  SyntheticCorpus out;
  for (std::size_t i = 0; i < count; ++i) {
    const int family = static_cast<int>(i % 3);
    MolGraph  g      = syntheticMolecule(family, config, deriveSeed(seed, i));
    g.setName("syn" + std::to_string(i));
    out.graphs.push_back(std::move(g));
    out.family.push_back(family);
  }
  return out;
}

Dataset syntheticDataset(const SyntheticCorpus& corpus) {
  Dataset d;
  d.taskCount = 1;
  for (std::size_t i = 0; i < corpus.graphs.size(); ++i) {
    Record r;
    r.graph  = corpus.graphs[i];
    r.labels = {corpus.family[i] == 0 ? 1.0 : 0.0};
    r.id     = corpus.graphs[i].name().value_or("syn" + std::to_string(i));
    d.records.push_back(std::move(r));
  }
  return d;
}

}  // namespace topocl
