// SPDX-License-Identifier: Apache-2.0

#include "topocl/metrics.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <set>

#include "topocl/hash.h"
#include "topocl/io_util.h"
#include "topocl/rng.h"

namespace topocl {

namespace {

void requireSameLength(std::span<const double> a, std::span<const double> b, const char* op) {
  if (a.size() != b.size()) {
    throw LengthMismatch(std::string(op) + ": lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
}

std::uint64_t bondCode(BondType t) {
  return static_cast<std::uint64_t>(t) + 1;
}

}  // namespace

double euclidean(std::span<const double> a, std::span<const double> b) {
  requireSameLength(a, b, "euclidean");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

double cosineSimilarity(std::span<const double> a, std::span<const double> b) {
  requireSameLength(a, b, "cosine");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw ZeroNorm("cosine similarity of a zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

std::size_t BitFingerprint::popcount() const {
  std::size_t c = 0;
  for (auto w : words) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

std::vector<int> BitFingerprint::bits() const {
  std::vector<int> out;
  for (int b = 0; b < width; ++b) {
    if (test(b)) out.push_back(b);
  }
  return out;
}

BitFingerprint morganBits(const MolGraph& graph, int radius, int width) {
  if (width <= 0 || !std::has_single_bit(static_cast<unsigned>(width))) {
    throw InvalidArgument("fingerprint width must be a power of two");
  }
  if (radius < 0) throw InvalidArgument("fingerprint radius must be nonnegative");
  BitFingerprint fp;
  fp.width  = width;
  fp.radius = radius;
  fp.words.assign((static_cast<std::size_t>(width) + 63) / 64, 0);
  const std::uint64_t mask = static_cast<std::uint64_t>(width) - 1;
  auto                set  = [&](std::uint64_t code) {
    const auto b = code & mask;
    fp.words[b / 64] |= std::uint64_t{1} << (b % 64);
  };

  const auto                 n   = static_cast<std::size_t>(graph.numAtoms());
  const auto                 adj = graph.adjacency();
  std::vector<std::uint64_t> codes(n);
  for (std::size_t a = 0; a < n; ++a) {
    std::uint64_t h = hashCombine(kMorganSeed, static_cast<std::uint64_t>(graph.atoms()[a].atomicNumber));
    h               = hashCombine(h, adj[a].size());
    std::vector<std::uint64_t> types;
    for (auto [nbr, bond] : adj[a]) types.push_back(bondCode(graph.bonds()[static_cast<std::size_t>(bond)].type));
    std::sort(types.begin(), types.end());
    for (auto t : types) h = hashCombine(h, t);
    codes[a] = h;
    set(h);
  }
  std::vector<std::pair<std::uint64_t, std::uint64_t>> env;
  for (int r = 1; r <= radius; ++r) {
    std::vector<std::uint64_t> next(n);
    for (std::size_t a = 0; a < n; ++a) {
      std::uint64_t h = hashCombine(hashCombine(kMorganSeed, static_cast<std::uint64_t>(r)), codes[a]);
      env.clear();
      for (auto [nbr, bond] : adj[a]) {
        env.emplace_back(bondCode(graph.bonds()[static_cast<std::size_t>(bond)].type), codes[static_cast<std::size_t>(nbr)]);
      }
      std::sort(env.begin(), env.end());
      for (auto [t, c] : env) h = hashCombine(hashCombine(h, t), c);
      next[a] = h;
      set(h);
    }
    codes.swap(next);
  }
  return fp;
}

double tanimoto(const BitFingerprint& a, const BitFingerprint& b) {
  if (a.width != b.width) throw LengthMismatch("tanimoto: fingerprint widths differ");
  std::size_t both = 0, either = 0;
  for (std::size_t i = 0; i < a.words.size(); ++i) {
    both += static_cast<std::size_t>(std::popcount(a.words[i] & b.words[i]));
    either += static_cast<std::size_t>(std::popcount(a.words[i] | b.words[i]));
  }
  return either == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(either);
}

std::vector<std::pair<std::size_t, std::size_t>> samplePairs(std::size_t n, std::size_t maxPairs, std::uint64_t seed) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t                                total = n < 2 ? 0 : n * (n - 1) / 2;
  if (total <= maxPairs) {
    out.reserve(total);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) out.emplace_back(i, j);
    return out;
  }
  Rng                                           rng(seed);
  std::set<std::pair<std::size_t, std::size_t>> chosen;
  while (chosen.size() < maxPairs) {
    std::size_t i = static_cast<std::size_t>(rng.uniformInt(n));
    std::size_t j = static_cast<std::size_t>(rng.uniformInt(n - 1));
    if (j >= i) ++j;
    chosen.emplace(std::min(i, j), std::max(i, j));
  }
  return {chosen.begin(), chosen.end()};
}

std::size_t binIndex(double x, double lo, double hi, std::size_t bins) {
  if (!(x > lo)) return 0;
  if (!(x < hi)) return bins - 1;
  return std::min(bins - 1, static_cast<std::size_t>((x - lo) / (hi - lo) * static_cast<double>(bins)));
}

std::string pairHistogramToCsv(const PairHistogram& h, std::string_view firstName, std::string_view secondName) {
  std::string out = "bin_left,bin_right," + std::string(firstName) + "," + std::string(secondName) + "\n";
  for (std::size_t b = 0; b + 1 < h.edges.size(); ++b) {
    out += formatDouble(h.edges[b]) + "," + formatDouble(h.edges[b + 1]) + "," + std::to_string(h.first[b]) + "," +
           std::to_string(h.second[b]) + "\n";
  }
  return out;
}

PairHistogram similarityHistogram(std::span<const BitFingerprint> molecules, std::span<const std::vector<double>> fingerprints,
                                  const SimilarityHistogramConfig& config) {
  if (molecules.size() != fingerprints.size()) throw LengthMismatch("similarity histogram: inputs differ in count");
  if (config.bins < 1) throw InvalidArgument("similarity histogram needs at least one bin");
  const auto          pairs = samplePairs(molecules.size(), config.maxPairs, config.seed);
  std::vector<double> tani(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) tani[p] = tanimoto(molecules[pairs[p].first], molecules[pairs[p].second]);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return tani[a] > tani[b]; });
  const auto similarCount =
      static_cast<std::size_t>(std::ceil(config.similarFraction * static_cast<double>(pairs.size()) - 1e-9));

  PairHistogram h;
  h.pairs = pairs.size();
  h.first.assign(config.bins, 0);
  h.second.assign(config.bins, 0);
  for (std::size_t b = 0; b <= config.bins; ++b) h.edges.push_back(-1.0 + 2.0 * static_cast<double>(b) / static_cast<double>(config.bins));
  double sumFirst = 0.0, sumSecond = 0.0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto&  pr  = pairs[order[r]];
    const double cos = cosineSimilarity(fingerprints[pr.first], fingerprints[pr.second]);
    const auto   bin = binIndex(cos, -1.0, 1.0, config.bins);
    if (r < similarCount) {
      ++h.first[bin];
      sumFirst += cos;
    } else {
      ++h.second[bin];
      sumSecond += cos;
    }
  }
  const std::size_t nSecond = order.size() - std::min(similarCount, order.size());
  h.firstMean  = similarCount ? sumFirst / static_cast<double>(std::min(similarCount, order.size())) : 0.0;
  h.secondMean = nSecond ? sumSecond / static_cast<double>(nSecond) : 0.0;
  return h;
}

}  // namespace topocl
