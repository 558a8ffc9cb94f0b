// SPDX-License-Identifier: Apache-2.0

#include "topocl/parameters.h"

#include <bit>
#include <cstring>

#include "topocl/io_util.h"

namespace topocl {

static_assert(std::endian::native == std::endian::little, "checkpoint layout assumes a little-endian host");

void ParameterSet::add(std::string name, Matrix value) {
  if (index_.count(name)) throw InvalidArgument("duplicate parameter '" + name + "'");
  index_.emplace(name, names_.size());
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
}

bool ParameterSet::contains(std::string_view name) const {
  return index_.count(std::string(name)) > 0;
}

std::size_t ParameterSet::indexOf(std::string_view name) const {
  const auto it = index_.find(std::string(name));
  if (it == index_.end()) throw InvalidArgument("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

Matrix& ParameterSet::at(std::string_view name) {
  return values_[indexOf(name)];
}

const Matrix& ParameterSet::at(std::string_view name) const {
  return values_[indexOf(name)];
}

std::size_t ParameterSet::scalarCount() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
  return n;
}

bool ParameterSet::operator==(const ParameterSet& other) const {
  if (names_ != other.names_) return false;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i].rows() != other.values_[i].rows() || values_[i].cols() != other.values_[i].cols()) return false;
    if (std::memcmp(values_[i].data(), other.values_[i].data(), sizeof(double) * static_cast<std::size_t>(values_[i].size())) != 0) {
      return false;
    }
  }
  return true;
}

BoundParameters::BoundParameters(ad::Tape& tape, const ParameterSet& set, const std::vector<bool>& trainable)
    : tape_(&tape), set_(&set) {
  if (!trainable.empty() && trainable.size() != set.size()) throw LengthMismatch("trainable mask size");
  vars_.reserve(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    const bool grad = trainable.empty() || trainable[i];
    vars_.push_back(grad ? tape.variable(set.values()[i]) : tape.constant(set.values()[i]));
  }
}

BoundParameters::BoundParameters(const ParameterSet& set, std::vector<ad::Var> vars) : set_(&set), vars_(std::move(vars)) {
  if (vars_.size() != set.size()) throw LengthMismatch("bound variable count differs from parameter count");
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (vars_[i].rows() != set.values()[i].rows() || vars_[i].cols() != set.values()[i].cols()) {
      throw ad::ShapeMismatch("bound variable shape differs for " + set.names()[i]);
    }
  }
  tape_ = vars_.empty() ? nullptr : vars_.front().tape;
}

std::vector<Matrix> BoundParameters::gradients() const {
  std::vector<Matrix> out;
  out.reserve(vars_.size());
  for (const auto& v : vars_) out.push_back(tape_->grad(v));
  return out;
}

std::string serializeCheckpoint(const Checkpoint& checkpoint) {
  nlohmann::json manifest;
  manifest["version"] = kCheckpointVersion;
  manifest["meta"]    = checkpoint.meta;
  auto&       tensors = manifest["tensors"] = nlohmann::json::array();
  std::size_t offset  = 0;
  const auto& set     = checkpoint.parameters;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const Matrix& m = set.values()[i];
    tensors.push_back({{"name", set.names()[i]}, {"rows", m.rows()}, {"cols", m.cols()}, {"offset", offset}});
    offset += sizeof(double) * static_cast<std::size_t>(m.size());
  }
  const std::string text = manifest.dump();
  std::string       out(kCheckpointMagic);
  const auto        version = kCheckpointVersion;
  const auto        length  = static_cast<std::uint64_t>(text.size());
  out.append(reinterpret_cast<const char*>(&version), sizeof version);
  out.append(reinterpret_cast<const char*>(&length), sizeof length);
  out += text;
  for (const Matrix& m : set.values()) {
    out.append(reinterpret_cast<const char*>(m.data()), sizeof(double) * static_cast<std::size_t>(m.size()));
  }
  return out;
}

Checkpoint deserializeCheckpoint(std::string_view bytes) {
  const std::size_t header = kCheckpointMagic.size() + sizeof(std::uint32_t) + sizeof(std::uint64_t);
  if (bytes.size() < header || bytes.substr(0, kCheckpointMagic.size()) != kCheckpointMagic) {
    throw SchemaError("/magic", "not a checkpoint file");
  }
  std::uint32_t version = 0;
  std::uint64_t length  = 0;
  std::memcpy(&version, bytes.data() + kCheckpointMagic.size(), sizeof version);
  std::memcpy(&length, bytes.data() + kCheckpointMagic.size() + sizeof version, sizeof length);
  if (version != kCheckpointVersion) throw SchemaError("/version", "unsupported checkpoint version " + std::to_string(version));
  if (bytes.size() - header < length) throw SchemaError("/manifest", "truncated manifest");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.substr(header, length));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("/manifest", e.what());
  }
  const std::string_view data = bytes.substr(header + length);
  Checkpoint             out;
  out.meta = manifest.value("meta", nlohmann::json::object());
  if (!manifest.contains("tensors") || !manifest["tensors"].is_array()) throw SchemaError("/manifest/tensors", "missing");
  for (std::size_t i = 0; i < manifest["tensors"].size(); ++i) {
    const auto&       t    = manifest["tensors"][i];
    const std::string path = "/manifest/tensors/" + std::to_string(i);
    try {
      const auto rows   = t.at("rows").get<Eigen::Index>();
      const auto cols   = t.at("cols").get<Eigen::Index>();
      const auto offset = t.at("offset").get<std::size_t>();
      const auto nbytes = sizeof(double) * static_cast<std::size_t>(rows * cols);
      if (rows < 0 || cols < 0 || offset > data.size() || data.size() - offset < nbytes) {
        throw SchemaError(path, "tensor data out of range");
      }
      Matrix m(rows, cols);
      std::memcpy(m.data(), data.data() + offset, nbytes);
      out.parameters.add(t.at("name").get<std::string>(), std::move(m));
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(path, e.what());
    }
  }
  return out;
}

void saveCheckpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  writeFile(path, serializeCheckpoint(checkpoint));
}

Checkpoint loadCheckpoint(const std::filesystem::path& path) {
  return deserializeCheckpoint(readFile(path));
}

}  // namespace topocl
