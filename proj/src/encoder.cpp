// SPDX-License-Identifier: Apache-2.0

#include "topocl/encoder.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace topocl {

void EncoderConfig::validate() const {
  if (layers < 1) throw InvalidArgument("encoder layers must be at least 1");
  if (hidden < 1) throw InvalidArgument("encoder hidden size must be at least 1");
  if (atomVocab < 2) throw InvalidArgument("atom vocabulary needs at least 2 rows");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidArgument("dropout must lie in [0, 1)");
}

namespace {

int atomCodeOf(int z, int vocab) {
  return std::min(z - 1, vocab - 1);
}

Matrix glorot(Rng& rng, int fanIn, int fanOut) {
  const double limit = std::sqrt(6.0 / (fanIn + fanOut));
  Matrix       m(fanIn, fanOut);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-limit, limit);
  return m;
}

std::string layerName(int l, const char* what) {
  return "encoder.layer" + std::to_string(l) + "." + what;
}

}  // namespace

GraphBatch makeBatch(std::span<const MolGraph* const> graphs, const EncoderConfig& config) {
  GraphBatch b;
  b.numGraphs = static_cast<int>(graphs.size());
  int offset  = 0;
  for (int g = 0; g < b.numGraphs; ++g) {
    const MolGraph& mol = *graphs[static_cast<std::size_t>(g)];
    const auto      deg = mol.degrees();
    for (int v = 0; v < mol.numAtoms(); ++v) {
      b.atomCode.push_back(atomCodeOf(mol.atoms()[static_cast<std::size_t>(v)].atomicNumber, config.atomVocab));
      b.degreeCode.push_back(std::min(deg[static_cast<std::size_t>(v)], kDegreeBuckets - 1));
      b.graphOf.push_back(g);
    }
    for (const Bond& bond : mol.bonds()) {
      const int code = static_cast<int>(bond.type);
      b.edgeSrc.push_back(offset + bond.u);
      b.edgeDst.push_back(offset + bond.v);
      b.bondCode.push_back(code);
      b.edgeSrc.push_back(offset + bond.v);
      b.edgeDst.push_back(offset + bond.u);
      b.bondCode.push_back(code);
    }
    b.nodesPerGraph.push_back(mol.numAtoms());
    offset += mol.numAtoms();
  }
  return b;
}

GraphBatch makeBatch(std::span<const MolGraph> graphs, const EncoderConfig& config) {
  std::vector<const MolGraph*> ptrs;
  ptrs.reserve(graphs.size());
  for (const auto& g : graphs) ptrs.push_back(&g);
  return makeBatch(std::span<const MolGraph* const>(ptrs), config);
}

void initEncoder(ParameterSet& params, const EncoderConfig& config, Rng& rng) {
  config.validate();
  const int h = config.hidden;
  params.add("encoder.atom_embedding", glorot(rng, config.atomVocab, h));
  params.add("encoder.degree_embedding", glorot(rng, kDegreeBuckets, h));
  for (int l = 0; l < config.layers; ++l) {
    params.add(layerName(l, "bond_embedding"), glorot(rng, kNumBondTypes, h));
    params.add(layerName(l, "eps"), Matrix::Zero(1, 1));
    params.add(layerName(l, "w1"), glorot(rng, h, h));
    params.add(layerName(l, "b1"), Matrix::Zero(1, h));
    params.add(layerName(l, "w2"), glorot(rng, h, h));
    params.add(layerName(l, "b2"), Matrix::Zero(1, h));
  }
}

void initHead(ParameterSet& params, const std::string& prefix, int in, int hidden, int out, Rng& rng) {
  params.add(prefix + ".w1", glorot(rng, in, hidden));
  params.add(prefix + ".b1", Matrix::Zero(1, hidden));
  params.add(prefix + ".w2", glorot(rng, hidden, out));
  params.add(prefix + ".b2", Matrix::Zero(1, out));
}

void initLinear(ParameterSet& params, const std::string& prefix, int in, int out, Rng& rng) {
  params.add(prefix + ".w", glorot(rng, in, out));
  params.add(prefix + ".b", Matrix::Zero(1, out));
}

ad::Var meanReadout(ad::Tape& tape, ad::Var nodes, const GraphBatch& batch) {
  Matrix inv(batch.numGraphs, 1);
  for (int g = 0; g < batch.numGraphs; ++g) {
    const int n = batch.nodesPerGraph[static_cast<std::size_t>(g)];
    if (n == 0) throw InvalidArgument("mean readout of a graph without nodes");
    inv(g, 0) = 1.0 / n;
  }
  return ad::mul(ad::scatterAddRows(nodes, batch.graphOf, batch.numGraphs), tape.constant(std::move(inv)));
}

EncoderOutput encode(ad::Tape& tape, const BoundParameters& params, const GraphBatch& batch, const EncoderConfig& config,
                     Rng* dropoutRng) {
  const ad::Var atomTable = params["encoder.atom_embedding"];
  const ad::Var degTable  = params["encoder.degree_embedding"];
  for (int code : batch.atomCode) {
    if (code < 0 || code >= atomTable.rows()) {
      throw VocabOverflow("atom code " + std::to_string(code) + " outside an embedding table of " +
                          std::to_string(atomTable.rows()) + " rows");
    }
  }
  for (int code : batch.degreeCode) {
    if (code < 0 || code >= degTable.rows()) throw VocabOverflow("degree code " + std::to_string(code) + " out of range");
  }
  for (int code : batch.bondCode) {
    if (code < 0 || code >= kNumBondTypes) throw VocabOverflow("bond code " + std::to_string(code) + " out of range");
  }

  const Eigen::Index n = batch.numNodes();
  ad::Var            h = ad::add(ad::gatherRows(atomTable, batch.atomCode), ad::gatherRows(degTable, batch.degreeCode));
  for (int l = 0; l < config.layers; ++l) {
    ad::Var agg = ad::mul(h, ad::addScalar(params[layerName(l, "eps")], 1.0));
    if (!batch.edgeSrc.empty()) {
      const ad::Var msg = ad::add(ad::gatherRows(h, batch.edgeSrc), ad::gatherRows(params[layerName(l, "bond_embedding")], batch.bondCode));
      agg               = ad::add(agg, ad::scatterAddRows(msg, batch.edgeDst, n));
    }
    const ad::Var z1 = ad::relu(ad::add(ad::matmul(agg, params[layerName(l, "w1")]), params[layerName(l, "b1")]));
    h                = ad::add(ad::matmul(z1, params[layerName(l, "w2")]), params[layerName(l, "b2")]);
    if (l + 1 < config.layers) h = ad::relu(h);
    if (dropoutRng && config.dropout > 0.0) {
      Matrix       mask(h.rows(), h.cols());
      const double keep = 1.0 - config.dropout;
      for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = dropoutRng->uniform01() < keep ? 1.0 / keep : 0.0;
      h = ad::mulConstant(h, mask);
    }
  }
  return {h, meanReadout(tape, h, batch)};
}

ad::Var applyHead(const BoundParameters& params, const std::string& prefix, ad::Var x) {
  const ad::Var z = ad::relu(ad::add(ad::matmul(x, params[prefix + ".w1"]), params[prefix + ".b1"]));
  return ad::add(ad::matmul(z, params[prefix + ".w2"]), params[prefix + ".b2"]);
}

ad::Var applyLinear(const BoundParameters& params, const std::string& prefix, ad::Var x) {
  return ad::add(ad::matmul(x, params[prefix + ".w"]), params[prefix + ".b"]);
}

namespace {

constexpr int kMaxAugmentAttempts = 8;

std::optional<MolGraph> dropNodes(const MolGraph& g, double ratio, Rng& rng) {
  const int n    = g.numAtoms();
  const int drop = static_cast<int>(std::ceil(ratio * n - 1e-12));
  if (drop >= n) return std::nullopt;
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span<int>(order));
  std::vector<bool> removed(static_cast<std::size_t>(n), false);
  for (int k = 0; k < drop; ++k) removed[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = true;
  std::vector<int> newIndex(static_cast<std::size_t>(n), -1);
  MolGraph         out;
  for (int v = 0; v < n; ++v) {
    if (!removed[static_cast<std::size_t>(v)]) newIndex[static_cast<std::size_t>(v)] = out.addAtom(g.atoms()[static_cast<std::size_t>(v)].atomicNumber);
  }
  for (const Bond& b : g.bonds()) {
    const int u = newIndex[static_cast<std::size_t>(b.u)], v = newIndex[static_cast<std::size_t>(b.v)];
    if (u >= 0 && v >= 0) out.addBond(u, v, b.type);
  }
  out.setName(g.name());
  return out;
}

std::optional<MolGraph> perturbEdges(const MolGraph& g, double ratio, Rng& rng) {
  const int m    = g.numBonds();
  const int n    = g.numAtoms();
  const int flip = static_cast<int>(std::ceil(ratio * m - 1e-12));
  if (flip == 0) return g;
  std::vector<std::pair<int, int>> candidates;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (!g.hasBond(u, v)) candidates.emplace_back(u, v);
  if (static_cast<int>(candidates.size()) < flip) return std::nullopt;
  std::vector<int> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span<int>(order));
  std::vector<bool> removed(static_cast<std::size_t>(m), false);
  for (int k = 0; k < flip; ++k) removed[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = true;
  rng.shuffle(std::span<std::pair<int, int>>(candidates));
  MolGraph out;
  for (const Atom& a : g.atoms()) out.addAtom(a.atomicNumber);
  for (int e = 0; e < m; ++e) {
    const Bond& b = g.bonds()[static_cast<std::size_t>(e)];
    if (!removed[static_cast<std::size_t>(e)]) out.addBond(b.u, b.v, b.type);
  }
  for (int k = 0; k < flip; ++k) {
    const auto [u, v] = candidates[static_cast<std::size_t>(k)];
    out.addBond(u, v, BondType::Single);
  }
  out.setName(g.name());
  return out;
}

}  // namespace

AugmentResult augment(const MolGraph& graph, Augmentation aug, std::uint64_t seed) {
  if (!(aug.ratio >= 0.0 && aug.ratio < 1.0)) throw InvalidArgument("augmentation ratio must lie in [0, 1)");
  if (aug.ratio == 0.0) return {graph, false};
  for (int attempt = 0; attempt < kMaxAugmentAttempts; ++attempt) {
    Rng  rng(deriveSeed(seed, static_cast<std::uint64_t>(attempt)));
    auto out = aug.kind == Augmentation::Kind::NodeDrop ? dropNodes(graph, aug.ratio, rng) : perturbEdges(graph, aug.ratio, rng);
    if (out) return {std::move(*out), false};
  }
  return {graph, true};
}

}  // namespace topocl
