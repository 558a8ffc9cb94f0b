// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "topocl/autodiff.h"
#include "topocl/error.h"
#include "topocl/mol_graph.h"
#include "topocl/parameters.h"
#include "topocl/rng.h"

namespace topocl {

//! A packed feature code has no row in the embedding table.
class VocabOverflow : public Error {
 public:
  using Error::Error;
};

constexpr int kDegreeBuckets = 9;  // degrees 0..8, higher degrees share the last bucket

struct EncoderConfig {
  int    layers = 5;
  int    hidden = 300;
  //! Atom embedding rows. Atomic number z uses row z - 1 when z - 1 < vocab - 1, otherwise the last
  //! (overflow) row.
  int    atomVocab = 119;
  double dropout   = 0.0;

  //! Throws InvalidArgument when layers < 1, hidden < 1, atomVocab < 2 or dropout outside [0, 1).
  void validate() const;
  bool operator==(const EncoderConfig&) const = default;
};

//! Several graphs packed into one disjoint union. Every undirected bond appears as two directed
//! message edges.
struct GraphBatch {
  int              numGraphs = 0;
  std::vector<int> atomCode;
  std::vector<int> degreeCode;
  std::vector<int> graphOf;
  std::vector<int> edgeSrc;
  std::vector<int> edgeDst;
  std::vector<int> bondCode;
  std::vector<int> nodesPerGraph;

  int numNodes() const { return static_cast<int>(atomCode.size()); }
};

GraphBatch makeBatch(std::span<const MolGraph* const> graphs, const EncoderConfig& config);
GraphBatch makeBatch(std::span<const MolGraph> graphs, const EncoderConfig& config);

//! Adds encoder parameters under "encoder.": atom/degree embeddings, then per layer l a bond
//! embedding, eps and a two-layer MLP. Glorot-uniform weights, zero biases, eps = 0.
void initEncoder(ParameterSet& params, const EncoderConfig& config, Rng& rng);

//! Two-layer MLP head `<prefix>.w1, b1, w2, b2`: in -> hidden -> out with ReLU between.
void initHead(ParameterSet& params, const std::string& prefix, int in, int hidden, int out, Rng& rng);
//! Single linear layer `<prefix>.w, b`.
void initLinear(ParameterSet& params, const std::string& prefix, int in, int out, Rng& rng);

struct EncoderOutput {
  ad::Var nodes;   // numNodes x hidden
  ad::Var graphs;  // numGraphs x hidden, mean readout
};

//! Dropout (inverted, rate config.dropout) after every layer when `dropoutRng` is non-null.
//! Layer update: h <- MLP((1 + eps_l) h + sum over neighbors (h_u + bond_l(uv))); ReLU after every
//! layer except the last.
EncoderOutput encode(ad::Tape& tape, const BoundParameters& params, const GraphBatch& batch, const EncoderConfig& config,
                     Rng* dropoutRng = nullptr);

//! Mean over the nodes of each graph.
ad::Var meanReadout(ad::Tape& tape, ad::Var nodes, const GraphBatch& batch);

//! relu(x w1 + b1) w2 + b2.
ad::Var applyHead(const BoundParameters& params, const std::string& prefix, ad::Var x);
ad::Var applyLinear(const BoundParameters& params, const std::string& prefix, ad::Var x);

struct Augmentation {
  enum class Kind { NodeDrop, EdgePerturb };
  Kind   kind  = Kind::NodeDrop;
  double ratio = 0.2;
};

struct AugmentResult {
  MolGraph graph;
  //! True when every attempt failed and the input was returned unchanged.
  bool     fallback = false;
};

//! Node drop removes ceil(ratio |V|) nodes chosen uniformly, with their bonds. Edge perturb removes
//! ceil(ratio |E|) bonds and adds as many single bonds between previously unbonded pairs. An attempt
//! that would leave no node or cannot place the new bonds is retried with a derived seed, at most 8
//! times, after which the input is returned with `fallback` set.
AugmentResult augment(const MolGraph& graph, Augmentation aug, std::uint64_t seed);

}  // namespace topocl
