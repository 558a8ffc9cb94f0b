// SPDX-License-Identifier: Apache-2.0

#include "topocl/manifest.h"

#include <openssl/evp.h>

#include <cstdio>

#include "topocl/error.h"
#include "topocl/io_util.h"

namespace topocl {

std::string gitBlobHash(std::string_view bytes) {
  const std::string header = "blob " + std::to_string(bytes.size()) + std::string(1, '\0');
  unsigned char     digest[EVP_MAX_MD_SIZE];
  unsigned int      length = 0;
  EVP_MD_CTX*       ctx    = EVP_MD_CTX_new();
  if (ctx == nullptr) throw Error("cannot allocate a digest context");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 && EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) == 1 && EVP_DigestFinal_ex(ctx, digest, &length) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw Error("SHA-1 digest failed");
  std::string hex;
  char        buf[3];
  for (unsigned int i = 0; i < length; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

RunManifest::RunManifest(std::string subcommand, nlohmann::json config, std::uint64_t seed) {
  doc_["manifest_version"] = 1;
  doc_["subcommand"]       = std::move(subcommand);
  doc_["config"]           = std::move(config);
  doc_["seed"]             = seed;
  doc_["inputs"]           = nlohmann::json::array();
  doc_["outputs"]          = nlohmann::json::array();
}

void RunManifest::addInput(const std::string& role, const std::filesystem::path& path) {
  const std::string bytes = readFile(path);
  doc_["inputs"].push_back({{"role", role}, {"path", path.generic_string()}, {"bytes", bytes.size()}, {"hash", gitBlobHash(bytes)}});
}

void RunManifest::addOutput(const std::filesystem::path& outDir, const std::filesystem::path& path) {
  const std::string bytes = readFile(path);
  doc_["outputs"].push_back({{"path", std::filesystem::relative(path, outDir).generic_string()},
                             {"bytes", bytes.size()},
                             {"hash", gitBlobHash(bytes)}});
}

void RunManifest::set(const std::string& key, nlohmann::json value) {
  doc_[key] = std::move(value);
}

std::string RunManifest::dump() const {
  return doc_.dump(2) + "\n";
}

nlohmann::json RunManifest::toJson() const {
  return doc_;
}

void RunManifest::write(const std::filesystem::path& outDir) const {
  writeFile(outDir / "manifest.json", dump());
}

}  // namespace topocl
