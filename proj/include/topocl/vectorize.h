// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "topocl/error.h"
#include "topocl/filtration.h"
#include "topocl/mol_graph.h"
#include "topocl/persistence.h"

namespace topocl {

//! The corpus range is degenerate on one axis (all values equal).
class EmptyRange : public Error {
 public:
  using Error::Error;
};

//! Ragged row in a fingerprint file; carries the 1-based data row number.
class RaggedRows : public Error {
 public:
  RaggedRows(std::size_t row, const std::string& message) : Error(message), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

class NonNumericCell : public Error {
 public:
  NonNumericCell(std::size_t row, std::size_t column, const std::string& message)
      : Error(message), row_(row), column_(column) {}
  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

//! Persistence-image axes: birth and persistence = |death - birth|.
struct PIRange {
  double birthMin = 0.0;
  double birthMax = 1.0;
  double persMin  = 0.0;
  double persMax  = 1.0;

  bool operator==(const PIRange&) const = default;
};

//! Min/max over every point of every diagram. Throws EmptyRange when either axis is degenerate.
PIRange corpusRange(std::span<const PersistenceDiagram> diagrams);
//! As corpusRange, but a degenerate axis [x, x] becomes [x, x + 1].
PIRange corpusRangeOrUnit(std::span<const PersistenceDiagram> diagrams);

struct PIConfig {
  int     resolution = 16;
  //! Gaussian bandwidth; 0 selects max(birth span, persistence span) / resolution.
  double  sigma = 0.0;
  PIRange range;

  double effectiveSigma() const;
  //! Throws InvalidArgument unless resolution >= 2, sigma >= 0 and both axes have positive span.
  void validate() const;
};

//! Class grids in this order; each contributes resolution^2 pixels.
constexpr PointKind kImageClassOrder[] = {PointKind::Ordinary, PointKind::Essential0Extended,
                                          PointKind::Cycle1Extended};

struct Provenance {
  enum class Kind { PersistenceImage, Landscape, Silhouette, Concat, External };
  Kind        kind = Kind::PersistenceImage;
  //! "pi:atom", "landscape:degree", "concat(pi:atom,pi:degree)", "external:todd", ...
  std::string tag;

  bool operator==(const Provenance&) const = default;
};

struct TopoFingerprint {
  std::vector<double> values;
  Provenance          provenance;
};

//! Pixel (i, j) of a class grid sits at row-major offset i * resolution + j, with i indexing birth
//! and j persistence. Value = sum over points of w * N(center; point, sigma^2 I) where
//! w = min(persistence / persMax, 1). Points with zero persistence contribute nothing.
TopoFingerprint persistenceImage(const PersistenceDiagram& diagram, const PIConfig& config);

//! Upper bound on ||PI(D) - PI(D')||_2 / W1(D, D') for diagrams inside the configured range:
//! sqrt(res^2) * (2 g_max / persMax + sqrt(5) * Lip(g)), g the Gaussian density.
double piStabilityConstant(const PIConfig& config);

struct SampleGrid {
  double tMin    = 0.0;
  double tMax    = 1.0;
  int    samples = 32;

  double at(int s) const;
};

//! lambda_k(t) for k = 1..kMax on the grid, per class in kImageClassOrder; length 3 * kMax * samples.
//! Tents use [min(b, d), max(b, d)] so Cycle1 points with death < birth are handled.
TopoFingerprint persistenceLandscape(const PersistenceDiagram& diagram, int kMax, const SampleGrid& grid);

//! Persistence^power weighted mean of tents, per class; length 3 * samples. Zero where no class
//! point has positive weight.
TopoFingerprint persistenceSilhouette(const PersistenceDiagram& diagram, double power, const SampleGrid& grid);

//! Values joined in argument order.
TopoFingerprint concatFingerprints(std::span<const TopoFingerprint> parts);

//! Reads a CSV with an `id` column and numeric columns. Tag = file stem.
std::map<std::string, TopoFingerprint> ingestExternalFingerprints(const std::filesystem::path& path);
std::map<std::string, TopoFingerprint> parseExternalFingerprints(std::string_view text, std::string_view tag);

//! `id,f0,f1,...` with 17 significant digits per value.
std::string fingerprintsToCsv(std::span<const std::string> ids, std::span<const TopoFingerprint> rows);

enum class VectorizerKind { PersistenceImage, Landscape, Silhouette };

//! How a corpus is turned into fingerprints: one diagram per filter, one vectorization per diagram,
//! concatenated in filter order.
struct FingerprintSpec {
  std::vector<FilterKind> filters{FilterKind::atomicNumber()};
  VectorizerKind          vectorizer = VectorizerKind::PersistenceImage;
  int                     resolution = 16;
  double                  sigma      = 0.0;
  int                     landscapeK = 3;
  int                     samples    = 32;
  double                  power      = 1.0;
};

//! "atom", "degree", "hks" or "ahd" (atom + hks(0.1) + degree).
std::vector<FilterKind> filterPreset(std::string_view name);

struct CorpusFingerprints {
  std::vector<TopoFingerprint> rows;
  //! One range per filter, fixed over the corpus.
  std::vector<PIRange>         ranges;
  //! One landscape/silhouette sample grid per filter, spanning every corpus birth and death.
  std::vector<SampleGrid>      grids;
};

//! Computes every diagram first (parallel over molecules with `jobs` workers, 0 = hardware
//! concurrency), fixes per-filter corpus ranges, then vectorizes. Output is independent of `jobs`.
CorpusFingerprints fingerprintCorpus(std::span<const MolGraph> graphs, const FingerprintSpec& spec, unsigned jobs = 0);

//! Fingerprint of a graph outside the corpus (an augmented view, say) in the corpus frame: the same
//! ranges and grids, so rows are comparable with `frame.rows`.
TopoFingerprint fingerprintInFrame(const MolGraph& graph, const FingerprintSpec& spec, const CorpusFingerprints& frame);

//! Stateless fingerprint handle for scripting front ends. A batch of SMILES is fingerprinted as one
//! corpus in the given order, exactly as the `fingerprint` subcommand treats the same molecules.
class Fingerprinter {
 public:
  explicit Fingerprinter(FingerprintSpec spec) : spec_(std::move(spec)) {}
  //! Default spec with the filters of a preset ("atom", "degree", "hks", "ahd").
  static Fingerprinter fromPreset(std::string_view preset);

  const FingerprintSpec& spec() const { return spec_; }

  //! A one-molecule corpus. Throws SmilesError as the parser does.
  TopoFingerprint              fingerprint(std::string_view smiles) const;
  std::vector<TopoFingerprint> fingerprintBatch(std::span<const std::string> smiles) const;

 private:
  FingerprintSpec spec_;
};

}  // namespace topocl
