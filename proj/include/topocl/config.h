// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "topocl/dataset.h"
#include "topocl/encoder.h"
#include "topocl/losses.h"
#include "topocl/trainer.h"
#include "topocl/vectorize.h"

namespace topocl {

//! Round-trippable name of a filter: "atom", "degree" or "hks:<t>".
std::string filterName(const FilterKind& kind);
std::string_view vectorizerName(VectorizerKind kind);
//! "pi", "landscape", "silhouette".
VectorizerKind   vectorizerFromName(std::string_view name);

// Every reader below starts from `base`, overrides the keys present in `object`, and throws
// SchemaError (with a JSON-pointer path rooted at `path`) on unknown keys or wrongly typed values.
nlohmann::json  toJson(const EncoderConfig& config);
EncoderConfig   encoderConfigFromJson(const nlohmann::json& object, const std::string& path, EncoderConfig base = {});
nlohmann::json  toJson(const LossConfig& config);
LossConfig      lossConfigFromJson(const nlohmann::json& object, const std::string& path, LossConfig base = {});
nlohmann::json  toJson(const FingerprintSpec& spec);
FingerprintSpec fingerprintSpecFromJson(const nlohmann::json& object, const std::string& path, FingerprintSpec base = {});
//! Loss and fingerprint live at the top level of a run config, so they are not part of this object.
nlohmann::json  toJson(const TrainConfig& config);
TrainConfig     trainConfigFromJson(const nlohmann::json& object, const std::string& path, TrainConfig base = {});
nlohmann::json  toJson(const ProbeConfig& config);
ProbeConfig     probeConfigFromJson(const nlohmann::json& object, const std::string& path, ProbeConfig base = {});

struct DatasetSource {
  std::filesystem::path path;
  DatasetFormat         format = DatasetFormat::CsvSmiles;
};

struct EvalConfig {
  //! Pair cap for distance correlation, distance probe and alignment histograms.
  std::size_t pairs = 10000;
  std::size_t bins  = 20;
  int         k     = 5;
};

//! Merged configuration of one CLI run.
struct RunConfig {
  std::string                  preset = "desk";
  std::optional<DatasetSource> dataset;
  //! Fingerprint CSV used instead of computing fingerprints.
  std::filesystem::path        externalFingerprints;
  std::filesystem::path        checkpoint;
  //! Embedding CSV (`id,f0,...`) used instead of a checkpoint by distances/spectra/hist.
  std::filesystem::path        embeddings;
  std::filesystem::path        outDir = "out";
  std::uint64_t                seed   = 0;
  unsigned                     jobs   = 0;
  EncoderConfig                encoder;
  TrainConfig                  train;
  ProbeConfig                  probe;
  EvalConfig                   eval;

  //! Copies the run seed into train and probe.
  void syncSeeds();
};

//! Top-level keys: extends, dataset {path, format}, external_fingerprints, checkpoint, embeddings,
//! out, seed, jobs, encoder, train, loss, fingerprint, probe, eval. "extends" names the preset
//! ("desk" by default) applied before the other keys.
RunConfig      parseRunConfig(const nlohmann::json& document);
RunConfig      loadRunConfig(const std::filesystem::path& path);
//! Snapshot with every field spelled out; parseRunConfig(toJson(c)) reproduces c.
nlohmann::json toJson(const RunConfig& config);

}  // namespace topocl
