// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "topocl/error.h"
#include "topocl/mol_graph.h"

namespace topocl {

enum class DatasetFormat { CsvSmiles, Jsonl };

//! Parses "csv-smiles" / "jsonl"; throws InvalidArgument otherwise.
DatasetFormat datasetFormatFromName(std::string_view name);

//! Every row of the input failed to parse.
class AllRowsFailed : public Error {
 public:
  using Error::Error;
};

struct LoadReport {
  std::size_t              rowsRead = 0;
  std::size_t              rowsSkipped = 0;
  //! One human-readable line per skipped row ("row 4: UnsupportedToken at offset 2: ...").
  std::vector<std::string> failures;
};

struct LoadResult {
  Dataset    dataset;
  LoadReport report;
};

//! CSV: header row with a mandatory `smiles` column, an optional `id` column, and every other column
//! taken as a numeric label (empty cell = missing). JSONL: one graph object per line with optional
//! `id` and `labels` (array of numbers or nulls). Rows that fail are skipped and reported.
LoadResult loadDataset(const std::filesystem::path& path, DatasetFormat format);
LoadResult parseCsvDataset(std::string_view text);
LoadResult parseJsonlDataset(std::string_view text);

//! A split part received no samples although its fraction is positive.
class EmptySplit : public Error {
 public:
  using Error::Error;
};

struct SplitFractions {
  double train = 0.8;
  double valid = 0.1;
  double test  = 0.1;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
  std::vector<std::size_t> test;
};

//! True when the dataset has one task whose labels are all present and in {0, 1}.
bool isBinarySingleTask(const Dataset& dataset);

//! Seeded random split. Part sizes use largest-remainder apportionment of the fractions. When the
//! labels are binary single-task the split is stratified: each class contributes floor or ceil of
//! its ideal share to every part. Index lists are returned sorted.
SplitIndices randomStratifiedSplit(const Dataset& dataset, SplitFractions fractions, std::uint64_t seed);

//! Same as above on bare class labels (-1 = no stratification possible for that sample set).
SplitIndices randomStratifiedSplit(std::size_t n, const std::vector<int>* classes, SplitFractions fractions,
                                   std::uint64_t seed);

}  // namespace topocl
