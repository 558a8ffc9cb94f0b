// SPDX-License-Identifier: Apache-2.0

#include "topocl/vectorize.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <set>

#include "topocl/io_util.h"
#include "topocl/parallel.h"
#include "topocl/smiles.h"

namespace topocl {

namespace {

constexpr std::size_t kNumClasses = std::size(kImageClassOrder);

std::size_t classSlot(PointKind kind) {
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (kImageClassOrder[c] == kind) return c;
  }
  return 0;
}

struct Extent {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double x) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  bool empty() const { return lo > hi; }
};

PIRange rangeOf(std::span<const PersistenceDiagram> diagrams, bool substituteUnit) {
  Extent b, p;
  for (const auto& d : diagrams) {
    for (const auto& pt : d.points) {
      b.add(pt.birth);
      p.add(pt.persistence());
    }
  }
  auto fix = [&](Extent& e, const char* axis) {
    if (e.empty()) e = {0.0, 0.0};
    if (e.hi > e.lo) return;
    if (!substituteUnit) throw EmptyRange(std::string("degenerate corpus range on the ") + axis + " axis");
    e.hi = e.lo + 1.0;
  };
  fix(b, "birth");
  fix(p, "persistence");
  return {b.lo, b.hi, p.lo, p.hi};
}

double tent(const PersistencePoint& pt, double t) {
  const double lo = std::min(pt.birth, pt.death);
  const double hi = std::max(pt.birth, pt.death);
  return std::max(0.0, std::min(t - lo, hi - t));
}

}  // namespace

PIRange corpusRange(std::span<const PersistenceDiagram> diagrams) {
  return rangeOf(diagrams, false);
}

PIRange corpusRangeOrUnit(std::span<const PersistenceDiagram> diagrams) {
  return rangeOf(diagrams, true);
}

double PIConfig::effectiveSigma() const {
  if (sigma > 0.0) return sigma;
  return std::max(range.birthMax - range.birthMin, range.persMax - range.persMin) / resolution;
}

void PIConfig::validate() const {
  if (resolution < 2) throw InvalidArgument("PI resolution must be at least 2");
  if (!(sigma >= 0.0)) throw InvalidArgument("PI sigma must be nonnegative");
  if (!(range.birthMax > range.birthMin) || !(range.persMax > range.persMin)) {
    throw InvalidArgument("PI range must have positive span on both axes");
  }
  if (!(range.persMax > 0.0)) throw InvalidArgument("PI persistence maximum must be positive");
}

TopoFingerprint persistenceImage(const PersistenceDiagram& diagram, const PIConfig& config) {
  config.validate();
  const int         res    = config.resolution;
  const auto        pixels = static_cast<std::size_t>(res) * static_cast<std::size_t>(res);
  const double      sigma  = config.effectiveSigma();
  const double      norm   = 1.0 / (2.0 * std::numbers::pi * sigma * sigma);
  const double      inv2s2 = 1.0 / (2.0 * sigma * sigma);
  const PIRange&    r      = config.range;
  const double      db     = (r.birthMax - r.birthMin) / res;
  const double      dp     = (r.persMax - r.persMin) / res;
  TopoFingerprint   out;
  out.values.assign(kNumClasses * pixels, 0.0);
  out.provenance = {Provenance::Kind::PersistenceImage, "pi:" + diagram.filterTag};
  for (const auto& pt : diagram.points) {
    const double pers = pt.persistence();
    const double w    = std::min(pers / r.persMax, 1.0);
    if (w <= 0.0) continue;
    double* grid = out.values.data() + classSlot(pt.kind) * pixels;
    for (int i = 0; i < res; ++i) {
      const double cb = r.birthMin + (i + 0.5) * db - pt.birth;
      for (int j = 0; j < res; ++j) {
        const double cp = r.persMin + (j + 0.5) * dp - pers;
        grid[i * res + j] += w * norm * std::exp(-(cb * cb + cp * cp) * inv2s2);
      }
    }
  }
  return out;
}

double piStabilityConstant(const PIConfig& config) {
  const double sigma = config.effectiveSigma();
  const double gMax  = 1.0 / (2.0 * std::numbers::pi * sigma * sigma);
  const double lip   = std::exp(-0.5) / (2.0 * std::numbers::pi * sigma * sigma * sigma);
  return config.resolution * (2.0 * gMax / config.range.persMax + std::sqrt(5.0) * lip);
}

double SampleGrid::at(int s) const {
  return samples == 1 ? tMin : tMin + (tMax - tMin) * s / (samples - 1);
}

TopoFingerprint persistenceLandscape(const PersistenceDiagram& diagram, int kMax, const SampleGrid& grid) {
  if (kMax < 1 || grid.samples < 2) throw InvalidArgument("landscape needs kMax >= 1 and samples >= 2");
  const auto      block = static_cast<std::size_t>(kMax) * static_cast<std::size_t>(grid.samples);
  TopoFingerprint out;
  out.values.assign(kNumClasses * block, 0.0);
  out.provenance = {Provenance::Kind::Landscape, "landscape:" + diagram.filterTag};
  std::vector<double> tents;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto pts = diagram.ofKind(kImageClassOrder[c]);
    for (int s = 0; s < grid.samples; ++s) {
      const double t = grid.at(s);
      tents.clear();
      for (const auto& pt : pts) tents.push_back(tent(pt, t));
      std::sort(tents.begin(), tents.end(), std::greater<>());
      for (int k = 0; k < kMax && k < static_cast<int>(tents.size()); ++k) {
        out.values[c * block + static_cast<std::size_t>(k * grid.samples + s)] = tents[static_cast<std::size_t>(k)];
      }
    }
  }
  return out;
}

TopoFingerprint persistenceSilhouette(const PersistenceDiagram& diagram, double power, const SampleGrid& grid) {
  if (grid.samples < 2) throw InvalidArgument("silhouette needs samples >= 2");
  const auto      block = static_cast<std::size_t>(grid.samples);
  TopoFingerprint out;
  out.values.assign(kNumClasses * block, 0.0);
  out.provenance = {Provenance::Kind::Silhouette, "silhouette:" + diagram.filterTag};
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto pts = diagram.ofKind(kImageClassOrder[c]);
    double     wsum = 0.0;
    for (const auto& pt : pts) wsum += std::pow(pt.persistence(), power);
    if (!(wsum > 0.0)) continue;
    for (int s = 0; s < grid.samples; ++s) {
      double acc = 0.0;
      for (const auto& pt : pts) acc += std::pow(pt.persistence(), power) * tent(pt, grid.at(s));
      out.values[c * block + static_cast<std::size_t>(s)] = acc / wsum;
    }
  }
  return out;
}

TopoFingerprint concatFingerprints(std::span<const TopoFingerprint> parts) {
  TopoFingerprint out;
  out.provenance.kind = Provenance::Kind::Concat;
  out.provenance.tag  = "concat(";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    out.values.insert(out.values.end(), parts[i].values.begin(), parts[i].values.end());
    if (i) out.provenance.tag += ",";
    out.provenance.tag += parts[i].provenance.tag;
  }
  out.provenance.tag += ")";
  return out;
}

std::map<std::string, TopoFingerprint> parseExternalFingerprints(std::string_view text, std::string_view tag) {
  const auto rows = parseCsv(text);
  if (rows.empty()) throw SchemaError("/header", "fingerprint file has no header");
  const auto& header = rows[0];
  const auto  idIt   = std::find(header.begin(), header.end(), "id");
  if (idIt == header.end()) throw SchemaError("/header/id", "fingerprint file needs an `id` column");
  const auto idCol = static_cast<std::size_t>(idIt - header.begin());

  std::map<std::string, TopoFingerprint> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size()) {
      throw RaggedRows(r, "row " + std::to_string(r) + " has " + std::to_string(row.size()) + " cells, header has " +
                              std::to_string(header.size()));
    }
    TopoFingerprint fp;
    fp.provenance = {Provenance::Kind::External, "external:" + std::string(tag)};
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == idCol) continue;
      double x = 0.0;
      if (!parseDouble(trim(row[c]), x) || !std::isfinite(x)) {
        throw NonNumericCell(r, c, "row " + std::to_string(r) + " column '" + header[c] + "': '" + row[c] +
                                       "' is not a finite number");
      }
      fp.values.push_back(x);
    }
    if (!out.emplace(row[idCol], std::move(fp)).second) {
      throw SchemaError("/rows/" + std::to_string(r) + "/id", "duplicate id '" + row[idCol] + "'");
    }
  }
  return out;
}

std::map<std::string, TopoFingerprint> ingestExternalFingerprints(const std::filesystem::path& path) {
  return parseExternalFingerprints(readFile(path), path.stem().string());
}

std::string fingerprintsToCsv(std::span<const std::string> ids, std::span<const TopoFingerprint> rows) {
  if (ids.size() != rows.size()) throw LengthMismatch("fingerprint ids and rows differ in count");
  const std::size_t width = rows.empty() ? 0 : rows[0].values.size();
  std::string       out   = "id";
  for (std::size_t j = 0; j < width; ++j) out += ",f" + std::to_string(j);
  out += '\n';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].values.size() != width) throw LengthMismatch("fingerprint rows differ in width");
    out += csvEscape(ids[i]);
    for (double x : rows[i].values) {
      out += ',';
      out += formatDouble(x);
    }
    out += '\n';
  }
  return out;
}

std::vector<FilterKind> filterPreset(std::string_view name) {
  if (name == "ahd") return {FilterKind::atomicNumber(), FilterKind::heatKernel(0.1), FilterKind::degree()};
  return {filterKindFromName(name)};
}

namespace {

TopoFingerprint vectorizeOne(const PersistenceDiagram& diagram, const FingerprintSpec& spec, const PIRange& range,
                             const SampleGrid& grid) {
  switch (spec.vectorizer) {
    case VectorizerKind::Landscape:
      return persistenceLandscape(diagram, spec.landscapeK, grid);
    case VectorizerKind::Silhouette:
      return persistenceSilhouette(diagram, spec.power, grid);
    case VectorizerKind::PersistenceImage:
      break;
  }
  return persistenceImage(diagram, PIConfig{spec.resolution, spec.sigma, range});
}

}  // namespace

CorpusFingerprints fingerprintCorpus(std::span<const MolGraph> graphs, const FingerprintSpec& spec, unsigned jobs) {
  if (spec.filters.empty()) throw InvalidArgument("fingerprint spec needs at least one filter");
  const std::size_t n = graphs.size();
  const std::size_t f = spec.filters.size();
  std::vector<std::vector<PersistenceDiagram>> diagrams(f, std::vector<PersistenceDiagram>(n));
  parallelFor(n, jobs, [&](std::size_t i) {
    for (std::size_t k = 0; k < f; ++k) diagrams[k][i] = computeDiagram(graphs[i], spec.filters[k]);
  });

  CorpusFingerprints out;
  std::vector<std::vector<TopoFingerprint>> parts(n, std::vector<TopoFingerprint>(f));
  for (std::size_t k = 0; k < f; ++k) {
    const PIRange range = corpusRangeOrUnit(diagrams[k]);
    out.ranges.push_back(range);
    // Landscapes sample t over every birth and death value of the corpus.
    SampleGrid grid{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), spec.samples};
    for (const auto& d : diagrams[k]) {
      for (const auto& pt : d.points) {
        grid.tMin = std::min({grid.tMin, pt.birth, pt.death});
        grid.tMax = std::max({grid.tMax, pt.birth, pt.death});
      }
    }
    if (!(grid.tMax > grid.tMin)) grid.tMax = grid.tMin + 1.0;
    out.grids.push_back(grid);
    parallelFor(n, jobs, [&](std::size_t i) { parts[i][k] = vectorizeOne(diagrams[k][i], spec, range, grid); });
  }
  out.rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.rows.push_back(f == 1 ? std::move(parts[i][0]) : concatFingerprints(parts[i]));
  }
  return out;
}

TopoFingerprint fingerprintInFrame(const MolGraph& graph, const FingerprintSpec& spec, const CorpusFingerprints& frame) {
  if (frame.ranges.size() != spec.filters.size() || frame.grids.size() != spec.filters.size()) {
    throw InvalidArgument("corpus frame does not match the fingerprint spec");
  }
  std::vector<TopoFingerprint> parts;
  for (std::size_t k = 0; k < spec.filters.size(); ++k) {
    parts.push_back(vectorizeOne(computeDiagram(graph, spec.filters[k]), spec, frame.ranges[k], frame.grids[k]));
  }
  return parts.size() == 1 ? std::move(parts[0]) : concatFingerprints(parts);
}

Fingerprinter Fingerprinter::fromPreset(std::string_view preset) {
  FingerprintSpec spec;
  spec.filters = filterPreset(preset);
  return Fingerprinter(std::move(spec));
}

TopoFingerprint Fingerprinter::fingerprint(std::string_view smiles) const {
  const std::string one(smiles);
  return fingerprintBatch(std::span<const std::string>(&one, 1)).front();
}

std::vector<TopoFingerprint> Fingerprinter::fingerprintBatch(std::span<const std::string> smiles) const {
  std::vector<MolGraph> graphs;
  graphs.reserve(smiles.size());
  for (const std::string& s : smiles) graphs.push_back(parseSmiles(s));
  // One worker: calls from several host threads stay independent.
  return fingerprintCorpus(graphs, spec_, 1).rows;
}

}  // namespace topocl
