// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "topocl/autodiff.h"
#include "topocl/error.h"
#include "topocl/linalg.h"

namespace topocl {

//! Named dense parameters in insertion order. Order fixes the checkpoint layout and the optimizer
//! traversal.
class ParameterSet {
 public:
  //! Throws InvalidArgument on duplicate names.
  void add(std::string name, Matrix value);

  bool                            contains(std::string_view name) const;
  std::size_t                     indexOf(std::string_view name) const;
  Matrix&                         at(std::string_view name);
  const Matrix&                   at(std::string_view name) const;
  std::size_t                     size() const { return values_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  std::vector<Matrix>&            values() { return values_; }
  const std::vector<Matrix>&      values() const { return values_; }
  //! Total scalar count.
  std::size_t                     scalarCount() const;

  bool operator==(const ParameterSet& other) const;

 private:
  std::vector<std::string>                     names_;
  std::vector<Matrix>                          values_;
  std::unordered_map<std::string, std::size_t> index_;
};

//! Parameters placed on a tape. `trainable[i]` false makes the i-th a constant.
class BoundParameters {
 public:
  BoundParameters(ad::Tape& tape, const ParameterSet& set, const std::vector<bool>& trainable = {});
  //! Binds existing tape nodes, one per parameter in set order (shapes must match).
  BoundParameters(const ParameterSet& set, std::vector<ad::Var> vars);

  ad::Var operator[](std::string_view name) const { return vars_[set_->indexOf(name)]; }
  //! Gradients in parameter order after backward; zero for constants.
  std::vector<Matrix> gradients() const;

 private:
  ad::Tape*            tape_;
  const ParameterSet*  set_;
  std::vector<ad::Var> vars_;
};

//! Checkpoint bytes: "TDLCKPT1", u32 version, u64 manifest length, JSON manifest, raw doubles.
//! The manifest lists name, rows, cols and byte offset (from the start of the data block) per
//! tensor, plus caller metadata under "meta".
constexpr std::string_view kCheckpointMagic   = "TDLCKPT1";
constexpr std::uint32_t    kCheckpointVersion = 1;

struct Checkpoint {
  ParameterSet   parameters;
  nlohmann::json meta = nlohmann::json::object();
};

std::string serializeCheckpoint(const Checkpoint& checkpoint);
//! Throws SchemaError on a bad magic, version, manifest or truncated data.
Checkpoint  deserializeCheckpoint(std::string_view bytes);
void        saveCheckpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint  loadCheckpoint(const std::filesystem::path& path);

}  // namespace topocl
