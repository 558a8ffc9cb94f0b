// SPDX-License-Identifier: Apache-2.0

#include "topocl/dataset.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "topocl/graph_json.h"
#include "topocl/io_util.h"
#include "topocl/rng.h"
#include "topocl/smiles.h"

namespace topocl {

DatasetFormat datasetFormatFromName(std::string_view name) {
  if (name == "csv-smiles" || name == "csv") return DatasetFormat::CsvSmiles;
  if (name == "jsonl") return DatasetFormat::Jsonl;
  throw InvalidArgument("unknown dataset format '" + std::string(name) + "' (expected csv-smiles or jsonl)");
}

namespace {

LoadResult finish(LoadResult result) {
  if (result.dataset.records.empty()) {
    throw AllRowsFailed("no row could be parsed (" + std::to_string(result.report.rowsRead) + " rows read)" +
                        (result.report.failures.empty() ? "" : "; first failure: " + result.report.failures.front()));
  }
  return result;
}

}  // namespace

LoadResult parseCsvDataset(std::string_view text) {
  const auto rows = parseCsv(text);
  if (rows.empty()) {
    throw SchemaError("/header", "CSV has no header row");
  }
  const auto& header    = rows.front();
  int         smilesCol = -1;
  int         idCol     = -1;
  std::vector<int> labelCols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name = trim(header[c]);
    if (name == "smiles") {
      smilesCol = static_cast<int>(c);
    } else if (name == "id") {
      idCol = static_cast<int>(c);
    } else {
      labelCols.push_back(static_cast<int>(c));
    }
  }
  if (smilesCol < 0) {
    throw SchemaError("/header/smiles", "CSV header has no 'smiles' column");
  }
  LoadResult result;
  result.dataset.taskCount = static_cast<int>(labelCols.size());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    ++result.report.rowsRead;
    auto skip = [&](const std::string& why) {
      ++result.report.rowsSkipped;
      result.report.failures.push_back("row " + std::to_string(r) + ": " + why);
    };
    if (row.size() != header.size()) {
      skip("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(row.size()));
      continue;
    }
    Record rec;
    try {
      rec.graph = parseSmiles(trim(row[static_cast<std::size_t>(smilesCol)]));
    } catch (const Error& e) {
      skip(e.what());
      continue;
    }
    bool ok = true;
    for (const int c : labelCols) {
      const std::string cell = trim(row[static_cast<std::size_t>(c)]);
      if (cell.empty()) {
        rec.labels.emplace_back(std::nullopt);
        continue;
      }
      double value = 0.0;
      if (!parseDouble(cell, value)) {
        skip("non-numeric label '" + cell + "' in column '" + header[static_cast<std::size_t>(c)] + "'");
        ok = false;
        break;
      }
      rec.labels.emplace_back(value);
    }
    if (!ok) continue;
    rec.id = idCol >= 0 ? trim(row[static_cast<std::size_t>(idCol)]) : std::to_string(r - 1);
    result.dataset.records.push_back(std::move(rec));
  }
  return finish(std::move(result));
}

LoadResult parseJsonlDataset(std::string_view text) {
  LoadResult  result;
  int         taskCount = -1;
  std::size_t lineNo    = 0;
  std::size_t start     = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string line = trim(text.substr(start, end - start));
    start                  = end + 1;
    ++lineNo;
    if (line.empty()) continue;
    ++result.report.rowsRead;
    auto skip = [&](const std::string& why) {
      ++result.report.rowsSkipped;
      result.report.failures.push_back("line " + std::to_string(lineNo) + ": " + why);
    };
    try {
      nlohmann::json doc = nlohmann::json::parse(line);
      if (!doc.is_object()) throw SchemaError("/", "expected an object");
      Record rec;
      rec.id     = std::to_string(result.dataset.records.size());
      bool hasId = false;
      if (auto it = doc.find("id"); it != doc.end()) {
        rec.id = it->is_string() ? it->get<std::string>() : it->dump();
        hasId  = true;
        doc.erase("id");
      }
      if (auto it = doc.find("labels"); it != doc.end()) {
        if (!it->is_array()) throw SchemaError("/labels", "expected an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
          const auto& v = (*it)[i];
          if (v.is_null()) {
            rec.labels.emplace_back(std::nullopt);
          } else if (v.is_number()) {
            rec.labels.emplace_back(v.get<double>());
          } else {
            throw SchemaError("/labels/" + std::to_string(i), "expected a number or null");
          }
        }
        doc.erase("labels");
      }
      rec.graph = graphFromJson(doc);
      if (taskCount < 0) taskCount = static_cast<int>(rec.labels.size());
      if (static_cast<int>(rec.labels.size()) != taskCount) {
        throw SchemaError("/labels", "expected " + std::to_string(taskCount) + " labels");
      }
      if (!hasId && rec.graph.name()) {
        rec.id = *rec.graph.name();
      }
      result.dataset.records.push_back(std::move(rec));
    } catch (const nlohmann::json::exception& e) {
      skip(std::string("invalid JSON: ") + e.what());
    } catch (const Error& e) {
      skip(e.what());
    }
  }
  result.dataset.taskCount = std::max(taskCount, 0);
  return finish(std::move(result));
}

LoadResult loadDataset(const std::filesystem::path& path, DatasetFormat format) {
  const std::string text = readFile(path);
  return format == DatasetFormat::CsvSmiles ? parseCsvDataset(text) : parseJsonlDataset(text);
}

bool isBinarySingleTask(const Dataset& dataset) {
  if (dataset.taskCount != 1) return false;
  return std::all_of(dataset.records.begin(), dataset.records.end(), [](const Record& r) {
    return r.labels.size() == 1 && r.labels[0] && (*r.labels[0] == 0.0 || *r.labels[0] == 1.0);
  });
}

namespace {

constexpr int kParts = 3;

//! Largest-remainder apportionment of `n` items over `fractions`; ties go to the earlier part.
std::array<std::size_t, kParts> apportion(std::size_t n, const std::array<double, kParts>& fractions) {
  std::array<std::size_t, kParts> counts{};
  std::array<double, kParts>      rem{};
  std::size_t                     used = 0;
  for (int p = 0; p < kParts; ++p) {
    const double ideal = fractions[p] * static_cast<double>(n);
    counts[p]          = static_cast<std::size_t>(std::floor(ideal));
    rem[p]             = ideal - std::floor(ideal);
    used += counts[p];
  }
  std::array<int, kParts> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; used < n; ++k, ++used) {
    ++counts[order[k % kParts]];
  }
  return counts;
}

}  // namespace

SplitIndices randomStratifiedSplit(std::size_t n, const std::vector<int>* classes, SplitFractions fractions,
                                   std::uint64_t seed) {
  const std::array<double, kParts> f{fractions.train, fractions.valid, fractions.test};
  for (const double x : f) {
    if (!(x >= 0.0) || x > 1.0) throw InvalidArgument("split fractions must lie in [0, 1]");
  }
  if (std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-9) {
    throw InvalidArgument("split fractions must sum to 1");
  }
  const auto totals = apportion(n, f);
  for (int p = 0; p < kParts; ++p) {
    if (f[p] > 0.0 && totals[p] == 0) {
      static constexpr const char* kNames[] = {"train", "valid", "test"};
      throw EmptySplit(std::string(kNames[p]) + " part would be empty for " + std::to_string(n) + " samples");
    }
  }

  Rng rng(seed);
  // Group sample indices per class (a single group when not stratifying).
  std::vector<std::vector<std::size_t>> groups;
  if (classes != nullptr) {
    int maxClass = 0;
    for (const int c : *classes) maxClass = std::max(maxClass, c);
    groups.resize(static_cast<std::size_t>(maxClass) + 1);
    for (std::size_t i = 0; i < n; ++i) groups[static_cast<std::size_t>((*classes)[i])].push_back(i);
  } else {
    groups.emplace_back(n);
    std::iota(groups[0].begin(), groups[0].end(), std::size_t{0});
  }
  for (auto& g : groups) rng.shuffle(std::span<std::size_t>(g));

  // Per-class floor allocation, then hand out leftovers to the parts with the largest remaining demand.
  std::vector<std::array<std::size_t, kParts>> alloc(groups.size());
  std::vector<std::array<double, kParts>>      frac(groups.size());
  std::array<long long, kParts>                demand{};
  for (int p = 0; p < kParts; ++p) demand[p] = static_cast<long long>(totals[p]);
  for (std::size_t c = 0; c < groups.size(); ++c) {
    for (int p = 0; p < kParts; ++p) {
      const double ideal = f[p] * static_cast<double>(groups[c].size());
      alloc[c][p]        = static_cast<std::size_t>(std::floor(ideal));
      frac[c][p]         = ideal - std::floor(ideal);
      demand[p] -= static_cast<long long>(alloc[c][p]);
    }
  }
  for (std::size_t c = 0; c < groups.size(); ++c) {
    std::size_t left = groups[c].size() - (alloc[c][0] + alloc[c][1] + alloc[c][2]);
    std::array<int, kParts> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      if (demand[a] != demand[b]) return demand[a] > demand[b];
      return frac[c][a] > frac[c][b];
    });
    for (std::size_t k = 0; left > 0; ++k) {
      const int p = order[k % kParts];
      if (demand[p] <= 0 && k < kParts) continue;
      ++alloc[c][p];
      --demand[p];
      --left;
    }
  }

  SplitIndices out;
  std::array<std::vector<std::size_t>*, kParts> parts{&out.train, &out.valid, &out.test};
  for (std::size_t c = 0; c < groups.size(); ++c) {
    std::size_t pos = 0;
    for (int p = 0; p < kParts; ++p) {
      for (std::size_t k = 0; k < alloc[c][p]; ++k) parts[p]->push_back(groups[c][pos++]);
    }
  }
  for (auto* part : parts) std::sort(part->begin(), part->end());
  return out;
}

SplitIndices randomStratifiedSplit(const Dataset& dataset, SplitFractions fractions, std::uint64_t seed) {
  if (isBinarySingleTask(dataset)) {
    std::vector<int> classes;
    classes.reserve(dataset.size());
    for (const Record& r : dataset.records) classes.push_back(*r.labels[0] == 1.0 ? 1 : 0);
    return randomStratifiedSplit(dataset.size(), &classes, fractions, seed);
  }
  return randomStratifiedSplit(dataset.size(), nullptr, fractions, seed);
}

}  // namespace topocl
