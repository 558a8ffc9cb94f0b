// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "topocl/rng.h"
#include "topocl/smiles.h"
#include "topocl/vectorize.h"

using namespace topocl;

namespace {

PersistenceDiagram ordinaryDiagram(std::vector<std::pair<double, double>> pts) {
  PersistenceDiagram d;
  for (auto [b, dd] : pts) d.points.push_back({b, dd, 0, PointKind::Ordinary});
  d.filterTag = "test";
  return d;
}

std::vector<double> firstGrid(const TopoFingerprint& fp, std::size_t pixels) {
  return {fp.values.begin(), fp.values.begin() + static_cast<std::ptrdiff_t>(pixels)};
}

}  // namespace

TEST(PersistenceImage, EmptyAndZeroPersistenceAreZero) {
  PIConfig cfg{4, 0.5, {0, 2, 0, 4}};
  const auto empty = persistenceImage(PersistenceDiagram{}, cfg);
  EXPECT_EQ(empty.values.size(), 3u * 16u);
  EXPECT_TRUE(std::all_of(empty.values.begin(), empty.values.end(), [](double x) { return x == 0.0; }));
  const auto flat = persistenceImage(ordinaryDiagram({{1, 1}, {0.5, 0.5}}), cfg);
  EXPECT_TRUE(std::all_of(flat.values.begin(), flat.values.end(), [](double x) { return x == 0.0; }));
}

TEST(PersistenceImage, SinglePointMatchesDirectEvaluation) {
  // Point (b, p) = (1, 2): birth 1, death 3.
  PIConfig   cfg{2, 1.0, {0, 2, 0, 4}};
  const auto fp = persistenceImage(ordinaryDiagram({{1, 3}}), cfg);
  ASSERT_EQ(fp.values.size(), 12u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(fp.values[i], 0.04259475109761325, 1e-15);
  for (std::size_t i = 4; i < 12; ++i) EXPECT_EQ(fp.values[i], 0.0);
  EXPECT_EQ(fp.provenance.tag, "pi:test");
}

TEST(PersistenceImage, TwoPointGridMatchesDirectEvaluation) {
  PIConfig                  cfg{3, 0.5, {0, 2, 0, 4}};
  const auto                fp = persistenceImage(ordinaryDiagram({{0.3, 1.0}, {1.6, 4.7}}), cfg);
  const std::vector<double> expected{0.11091455356064683,  0.0055572553945673975, 0.017876883278052435,
                                     0.041721745105765984, 0.022778501325948327,  0.21537735284978454,
                                     0.0026558136104449987, 0.0435744344016304,   0.43856259605384285};
  const auto                grid = firstGrid(fp, 9);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(grid[i], expected[i], 1e-14) << i;
}

TEST(PersistenceImage, ClassesUseSeparateGrids) {
  PIConfig           cfg{2, 1.0, {0, 2, 0, 4}};
  PersistenceDiagram d;
  d.points = {{1, 3, 1, PointKind::Cycle1Extended}};
  const auto fp = persistenceImage(d, cfg);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(fp.values[i], 0.0);
  for (std::size_t i = 8; i < 12; ++i) EXPECT_NEAR(fp.values[i], 0.04259475109761325, 1e-15);
}

TEST(PersistenceImage, RangeAndConfigErrors) {
  const std::vector<PersistenceDiagram> flat{ordinaryDiagram({{1, 1}}), ordinaryDiagram({{1, 1}})};
  EXPECT_THROW(corpusRange(flat), EmptyRange);
  const PIRange unit = corpusRangeOrUnit(flat);
  EXPECT_EQ(unit, (PIRange{1, 2, 0, 1}));
  EXPECT_THROW(persistenceImage(PersistenceDiagram{}, PIConfig{1, 0, {0, 1, 0, 1}}), InvalidArgument);
  EXPECT_THROW(persistenceImage(PersistenceDiagram{}, PIConfig{4, 0, {0, 0, 0, 1}}), InvalidArgument);
  PIConfig def{16, 0.0, {0, 8, 0, 4}};
  EXPECT_DOUBLE_EQ(def.effectiveSigma(), 0.5);
}

TEST(PersistenceImage, StabilityRatioBoundedByKernelConstant) {
  Rng            rng(404);
  const PIConfig cfg{16, 0.0, {0, 10, 0, 5}};
  const double   bound = 10.0 * piStabilityConstant(cfg);
  double         worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    PersistenceDiagram a, b;
    const int          n = 1 + static_cast<int>(rng.uniformInt(8));
    for (int i = 0; i < n; ++i) {
      const double birth = rng.uniform(0, 8);
      const double pers  = rng.uniform(0.1, 4);
      a.points.push_back({birth, birth + pers, 0, PointKind::Ordinary});
      const double eps = rng.uniform(0, 0.3);
      b.points.push_back({birth + rng.uniform(-eps, eps), birth + pers + rng.uniform(-eps, eps), 0, PointKind::Ordinary});
    }
    const double w1 = diagramW1(a, b);
    if (w1 == 0.0) continue;
    const auto   pa = persistenceImage(a, cfg).values;
    const auto   pb = persistenceImage(b, cfg).values;
    double       sq = 0.0;
    for (std::size_t i = 0; i < pa.size(); ++i) sq += (pa[i] - pb[i]) * (pa[i] - pb[i]);
    worst = std::max(worst, std::sqrt(sq) / w1);
  }
  EXPECT_LE(worst, bound);
}

namespace {

// Brute-force k-th largest tent value for ordinary points.
double bruteLandscape(const std::vector<std::pair<double, double>>& pts, int k, double t) {
  std::vector<double> v;
  for (auto [b, d] : pts) v.push_back(std::max(0.0, std::min(t - b, d - t)));
  while (v.size() < static_cast<std::size_t>(k)) v.push_back(0.0);
  std::nth_element(v.begin(), v.begin() + (k - 1), v.end(), std::greater<>());
  return v[static_cast<std::size_t>(k - 1)];
}

}  // namespace

TEST(Landscape, EmptyApexAndNested) {
  const SampleGrid grid{0, 2, 3};
  const auto       empty = persistenceLandscape(PersistenceDiagram{}, 2, grid);
  EXPECT_EQ(empty.values.size(), 3u * 2u * 3u);
  EXPECT_TRUE(std::all_of(empty.values.begin(), empty.values.end(), [](double x) { return x == 0.0; }));

  const auto apex = persistenceLandscape(ordinaryDiagram({{0, 2}}), 1, grid);
  EXPECT_EQ(apex.values[1], 1.0);

  const std::vector<std::pair<double, double>> nested{{0, 6}, {1, 4}, {2, 3}};
  const SampleGrid                              fine{0, 6, 25};
  const auto                                    fp = persistenceLandscape(ordinaryDiagram(nested), 3, fine);
  for (int k = 1; k <= 3; ++k)
    for (int s = 0; s < fine.samples; ++s)
      EXPECT_DOUBLE_EQ(fp.values[static_cast<std::size_t>((k - 1) * fine.samples + s)], bruteLandscape(nested, k, fine.at(s)));
}

TEST(Silhouette, EmptySinglePointAndBruteForce) {
  const SampleGrid grid{0, 4, 9};
  const auto       empty = persistenceSilhouette(PersistenceDiagram{}, 1.0, grid);
  EXPECT_TRUE(std::all_of(empty.values.begin(), empty.values.end(), [](double x) { return x == 0.0; }));

  const auto single = ordinaryDiagram({{1, 3}});
  const auto sil    = persistenceSilhouette(single, 2.0, grid);
  const auto land   = persistenceLandscape(single, 1, grid);
  for (int s = 0; s < grid.samples; ++s) EXPECT_DOUBLE_EQ(sil.values[static_cast<std::size_t>(s)], land.values[static_cast<std::size_t>(s)]);

  Rng rng(9);
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < 4; ++i) {
    const double b = rng.uniform(0, 3);
    pts.emplace_back(b, b + rng.uniform(0.1, 2));
  }
  const auto fp = persistenceSilhouette(ordinaryDiagram(pts), 1.0, grid);
  for (int s = 0; s < grid.samples; ++s) {
    const double t = grid.at(s);
    double       num = 0, den = 0;
    for (auto [b, d] : pts) {
      num += (d - b) * std::max(0.0, std::min(t - b, d - t));
      den += d - b;
    }
    EXPECT_NEAR(fp.values[static_cast<std::size_t>(s)], num / den, 1e-14);
  }
}

TEST(Concat, LengthsAndOrder) {
  TopoFingerprint a{{1, 2, 3, 4}, {Provenance::Kind::PersistenceImage, "pi:atom"}};
  TopoFingerprint b{{5, 6, 7, 8, 9, 10}, {Provenance::Kind::PersistenceImage, "pi:degree"}};
  const std::vector<TopoFingerprint> ab{a, b}, ba{b, a}, only{a};
  const auto                         c = concatFingerprints(ab);
  EXPECT_EQ(c.values.size(), 10u);
  EXPECT_EQ(c.provenance.kind, Provenance::Kind::Concat);
  EXPECT_EQ(c.provenance.tag, "concat(pi:atom,pi:degree)");
  EXPECT_NE(c.values, concatFingerprints(ba).values);
  EXPECT_EQ(concatFingerprints(only).values, a.values);
}

TEST(External, IngestAndErrors) {
  const auto fps = parseExternalFingerprints("id,a,b,c\nm1,1,2,3\nm2,4,5,6.5\n", "todd");
  ASSERT_EQ(fps.size(), 2u);
  EXPECT_EQ(fps.at("m2").values, (std::vector<double>{4, 5, 6.5}));
  EXPECT_EQ(fps.at("m1").provenance.tag, "external:todd");
  try {
    parseExternalFingerprints("id,a,b\nm1,1,2\nm2,4\n", "x");
    FAIL();
  } catch (const RaggedRows& e) {
    EXPECT_EQ(e.row(), 2u);
  }
  try {
    parseExternalFingerprints("id,a,b\nm1,1,zz\n", "x");
    FAIL();
  } catch (const NonNumericCell& e) {
    EXPECT_EQ(e.row(), 1u);
    EXPECT_EQ(e.column(), 2u);
  }
  EXPECT_THROW(parseExternalFingerprints("a,b\n1,2\n", "x"), SchemaError);
}

TEST(External, CsvRoundTripIsBitExact) {
  Rng                          rng(2);
  std::vector<std::string>     ids{"a", "b,c", "d"};
  std::vector<TopoFingerprint> rows(3);
  for (auto& r : rows)
    for (int j = 0; j < 5; ++j) r.values.push_back(rng.normal() * std::pow(10.0, rng.uniform(-8, 8)));
  const auto back = parseExternalFingerprints(fingerprintsToCsv(ids, rows), "rt");
  for (std::size_t i = 0; i < ids.size(); ++i) EXPECT_EQ(back.at(ids[i]).values, rows[i].values);
}

TEST(Corpus, AhdWidthAndJobIndependence) {
  std::vector<MolGraph> graphs;
  for (const char* s : {"CCO", "C1CC1", "c1ccccc1O", "CC(=O)N", "C1CC2CC1C2"}) graphs.push_back(parseSmiles(s));
  FingerprintSpec single;
  single.resolution = 4;
  const auto one    = fingerprintCorpus(graphs, single, 1);
  ASSERT_EQ(one.rows.size(), graphs.size());
  EXPECT_EQ(one.rows[0].values.size(), 3u * 16u);
  FingerprintSpec ahd = single;
  ahd.filters         = filterPreset("ahd");
  const auto serial   = fingerprintCorpus(graphs, ahd, 1);
  const auto parallel = fingerprintCorpus(graphs, ahd, 4);
  EXPECT_EQ(serial.rows[0].values.size(), 3u * one.rows[0].values.size());
  for (std::size_t i = 0; i < graphs.size(); ++i) EXPECT_EQ(serial.rows[i].values, parallel.rows[i].values);
  EXPECT_EQ(serial.rows[0].provenance.tag, "concat(pi:atom,pi:hks0.1,pi:degree)");
}

TEST(Corpus, IngestedVectorsAreInterchangeable) {
  // The same numbers reach downstream code whether computed or read back from a file.
  std::vector<MolGraph> graphs{parseSmiles("CCO"), parseSmiles("C1CC1")};
  FingerprintSpec       spec;
  spec.resolution = 3;
  const auto fp   = fingerprintCorpus(graphs, spec, 1);
  const std::vector<std::string> ids{"x", "y"};
  const auto                     back = parseExternalFingerprints(fingerprintsToCsv(ids, fp.rows), "file");
  EXPECT_EQ(back.at("x").values, fp.rows[0].values);
  EXPECT_EQ(back.at("y").values, fp.rows[1].values);
}
