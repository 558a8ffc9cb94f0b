// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "topocl/error.h"
#include "topocl/mol_graph.h"

namespace topocl {

double euclidean(std::span<const double> a, std::span<const double> b);
//! Throws LengthMismatch on unequal lengths and ZeroNorm when either vector is zero.
double cosineSimilarity(std::span<const double> a, std::span<const double> b);

//! ECFP-like circular fingerprint. Not bit-compatible with any cheminformatics toolkit.
struct BitFingerprint {
  std::vector<std::uint64_t> words;
  int                        width  = 2048;
  int                        radius = 2;

  bool        test(int bit) const { return (words[static_cast<std::size_t>(bit) / 64] >> (bit % 64)) & 1u; }
  std::size_t popcount() const;
  //! Set bit positions in increasing order.
  std::vector<int> bits() const;
};

constexpr std::uint64_t kMorganSeed = 0x243F6A8885A308D3ULL;

//! Round 0 code: hash(seed, z, degree, sorted bond codes). Round r: hash(seed, r, previous code,
//! sorted (bond code, neighbor code) pairs). Bond codes are 1..4 for single..aromatic. The low
//! log2(width) bits of every code of every round are set. Width must be a power of two.
BitFingerprint morganBits(const MolGraph& graph, int radius = 2, int width = 2048);

//! |a & b| / |a | b|, and 1 when both are empty.
double tanimoto(const BitFingerprint& a, const BitFingerprint& b);

//! Unordered index pairs (i < j): all n(n-1)/2 when that is at most maxPairs, otherwise maxPairs
//! distinct pairs drawn with the seed. Returned in lexicographic order.
std::vector<std::pair<std::size_t, std::size_t>> samplePairs(std::size_t n, std::size_t maxPairs, std::uint64_t seed);

//! Two groups binned on the same fixed-width edges.
struct PairHistogram {
  std::vector<double>      edges;  // bins + 1 ascending
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;
  double                   firstMean  = 0.0;
  double                   secondMean = 0.0;
  std::size_t              pairs      = 0;
};

//! Index of the bin containing x on [lo, hi] with `bins` equal bins; values outside clamp to the ends.
std::size_t binIndex(double x, double lo, double hi, std::size_t bins);

//! CSV with header `bin_left,bin_right,<firstName>,<secondName>`.
std::string pairHistogramToCsv(const PairHistogram& h, std::string_view firstName, std::string_view secondName);

struct SimilarityHistogramConfig {
  std::size_t   bins            = 20;
  std::size_t   maxPairs        = 10000;
  double        similarFraction = 0.2;
  std::uint64_t seed            = 0;
};

//! Tanimoto over the sampled pairs ranks them; the top ceil(similarFraction * pairs) (ties by pair
//! order) form `first` (Similar), the rest `second` (Random). Both groups bin the cosine similarity
//! of the fingerprints on [-1, 1].
PairHistogram similarityHistogram(std::span<const BitFingerprint> molecules, std::span<const std::vector<double>> fingerprints,
                                  const SimilarityHistogramConfig& config);

}  // namespace topocl
