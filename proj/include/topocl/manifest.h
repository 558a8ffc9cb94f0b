// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace topocl {

//! Lowercase hex SHA-1 of "blob <size>\0" + bytes, the object id git assigns to a file.
std::string gitBlobHash(std::string_view bytes);

//! Record of one CLI run: everything needed to repeat it and check that it was repeated.
class RunManifest {
 public:
  RunManifest(std::string subcommand, nlohmann::json config, std::uint64_t seed);

  //! Hashes a file the run read.
  void addInput(const std::string& role, const std::filesystem::path& path);
  //! Hashes a file the run wrote; stored relative to `outDir`.
  void addOutput(const std::filesystem::path& outDir, const std::filesystem::path& path);
  void set(const std::string& key, nlohmann::json value);

  //! Keys sorted, no timestamps or host data, so identical runs give identical bytes.
  std::string    dump() const;
  nlohmann::json toJson() const;
  //! Writes `<outDir>/manifest.json`.
  void           write(const std::filesystem::path& outDir) const;

 private:
  nlohmann::json doc_;
};

}  // namespace topocl
