// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <numeric>

#include "topocl/metrics.h"
#include "topocl/rng.h"
#include "topocl/smiles.h"
#include "test_graphs.h"

using namespace topocl;

TEST(Distances, Examples) {
  const std::vector<double> x{1, 2, 3};
  EXPECT_EQ(euclidean(x, x), 0.0);
  EXPECT_EQ(cosineSimilarity(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 0.0);
  EXPECT_NEAR(cosineSimilarity(std::vector<double>{1, 1}, std::vector<double>{2, 2}), 1.0, 1e-15);
  EXPECT_NEAR(cosineSimilarity(x, x), 1.0, 1e-15);
  EXPECT_THROW(euclidean(x, std::vector<double>{1}), LengthMismatch);
  EXPECT_THROW(cosineSimilarity(x, std::vector<double>{0, 0, 0}), ZeroNorm);
}

TEST(Distances, SymmetryAndTriangle) {
  Rng rng(12);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> a(6), b(6), c(6);
    for (auto* v : {&a, &b, &c})
      for (double& x : *v) x = rng.normal();
    EXPECT_EQ(euclidean(a, b), euclidean(b, a));
    EXPECT_EQ(cosineSimilarity(a, b), cosineSimilarity(b, a));
    EXPECT_LE(euclidean(a, c), euclidean(a, b) + euclidean(b, c) + 1e-9);
  }
}

TEST(Morgan, FrozenReferenceBits) {
  const auto cco = morganBits(parseSmiles("CCO"));
  EXPECT_EQ(cco.popcount(), 9u);
  EXPECT_EQ(cco.bits(), (std::vector<int>{9, 37, 1053, 1063, 1144, 1603, 1703, 1797, 2009}));
  EXPECT_EQ(morganBits(parseSmiles("C")).bits(), (std::vector<int>{327, 618, 1312}));
  EXPECT_NE(morganBits(parseSmiles("C")).bits(), morganBits(parseSmiles("O")).bits());
  EXPECT_THROW(morganBits(parseSmiles("C"), 2, 1000), InvalidArgument);
}

TEST(Morgan, AtomOrderInvariance) {
  Rng rng(70);
  for (int t = 0; t < 100; ++t) {
    const MolGraph   g = testing_graphs::randomGraph(rng, 2 + static_cast<int>(rng.uniformInt(14)), 0.25);
    std::vector<int> perm(static_cast<std::size_t>(g.numAtoms()));
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span<int>(perm));
    EXPECT_EQ(morganBits(g).words, morganBits(testing_graphs::permuted(g, perm)).words);
  }
}

TEST(Tanimoto, Examples) {
  BitFingerprint a, b, empty;
  a.words = b.words = empty.words = std::vector<std::uint64_t>(32, 0);
  a.words[0] = 0b0011;
  b.words[0] = 0b1111;
  EXPECT_EQ(tanimoto(a, a), 1.0);
  EXPECT_EQ(tanimoto(a, b), 0.5);
  BitFingerprint c = a;
  c.words[0]       = 0b1100;
  EXPECT_EQ(tanimoto(a, c), 0.0);
  EXPECT_EQ(tanimoto(empty, empty), 1.0);
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    BitFingerprint x = empty, y = empty;
    for (auto& w : x.words) w = rng.next() & rng.next();
    for (auto& w : y.words) w = rng.next() & rng.next();
    const double v = tanimoto(x, y);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(SamplePairs, AllOrCapped) {
  EXPECT_EQ(samplePairs(5, 100, 1).size(), 10u);
  const auto capped = samplePairs(200, 50, 3);
  EXPECT_EQ(capped.size(), 50u);
  EXPECT_EQ(capped, samplePairs(200, 50, 3));
  for (auto [i, j] : capped) EXPECT_LT(i, j);
}

TEST(SimilarityHistogram, IdenticalMoleculesPeakAtOne) {
  std::vector<BitFingerprint>      mols(6, morganBits(parseSmiles("CCO")));
  std::vector<std::vector<double>> fps(6, std::vector<double>{1, 2, 3});
  const auto                       h = similarityHistogram(mols, fps, {});
  EXPECT_EQ(h.pairs, 15u);
  EXPECT_EQ(h.first.back() + h.second.back(), 15u);
  EXPECT_EQ(h.first.back(), 3u);
}

TEST(SimilarityHistogram, SeparatedClustersOrderMeans) {
  std::vector<BitFingerprint>      mols;
  std::vector<std::vector<double>> fps;
  Rng                              rng(8);
  for (int i = 0; i < 20; ++i) {
    const bool a = i % 2 == 0;
    mols.push_back(morganBits(parseSmiles(a ? "CCCCCCO" : "c1ccccc1N")));
    fps.push_back(a ? std::vector<double>{1 + 0.01 * rng.normal(), 0.01 * rng.normal()}
                    : std::vector<double>{0.01 * rng.normal(), 1 + 0.01 * rng.normal()});
  }
  const auto h = similarityHistogram(mols, fps, {});
  EXPECT_GE(h.firstMean, h.secondMean);
  EXPECT_EQ(h.pairs, 190u);
}
