// SPDX-License-Identifier: Apache-2.0

#include "topocl/config.h"

#include <charconv>
#include <set>

#include "topocl/io_util.h"

namespace topocl {

using nlohmann::json;

std::string filterName(const FilterKind& kind) {
  switch (kind.type) {
    case FilterKind::Type::AtomicNumber:
      return "atom";
    case FilterKind::Type::Degree:
      return "degree";
    case FilterKind::Type::HeatKernelSignature:
      break;
  }
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, kind.temperature);
  return "hks:" + std::string(buf, res.ptr);
}

std::string_view vectorizerName(VectorizerKind kind) {
  switch (kind) {
    case VectorizerKind::Landscape:
      return "landscape";
    case VectorizerKind::Silhouette:
      return "silhouette";
    case VectorizerKind::PersistenceImage:
      break;
  }
  return "pi";
}

VectorizerKind vectorizerFromName(std::string_view name) {
  for (VectorizerKind k : {VectorizerKind::PersistenceImage, VectorizerKind::Landscape, VectorizerKind::Silhouette}) {
    if (vectorizerName(k) == name) return k;
  }
  throw InvalidArgument("unknown vectorizer '" + std::string(name) + "' (expected pi, landscape or silhouette)");
}

namespace {

//! Typed access to one object level, tracking which keys were consumed.
class Reader {
 public:
  Reader(const json& object, std::string path) : object_(object), path_(std::move(path)) {
    if (!object_.is_object()) throw SchemaError(path_.empty() ? "/" : path_, "must be an object");
  }

  std::string at(const std::string& key) const { return path_ + "/" + key; }

  const json* find(const std::string& key) {
    const auto it = object_.find(key);
    if (it == object_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  void integer(const std::string& key, int& out, long long lo) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) throw SchemaError(at(key), "must be an integer");
      const auto x = v->get<long long>();
      if (x < lo || x > std::numeric_limits<int>::max()) throw SchemaError(at(key), "must be >= " + std::to_string(lo));
      out = static_cast<int>(x);
    }
  }

  void size(const std::string& key, std::size_t& out, long long lo) {
    int tmp = 0;
    if (find(key)) {
      seen_.erase(key);
      integer(key, tmp, lo);
      out = static_cast<std::size_t>(tmp);
    }
  }

  void u64(const std::string& key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0)) {
        throw SchemaError(at(key), "must be a nonnegative integer");
      }
      out = v->get<std::uint64_t>();
    }
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw SchemaError(at(key), "must be a number");
      out = v->get<double>();
    }
  }

  bool string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw SchemaError(at(key), "must be a string");
      out = v->get<std::string>();
      return true;
    }
    return false;
  }

  //! Runs `parse` on a string value, turning InvalidArgument into a SchemaError at the key.
  template <typename T, typename F>
  void named(const std::string& key, T& out, F parse) {
    std::string s;
    if (!string(key, s)) return;
    try {
      out = parse(s);
    } catch (const InvalidArgument& e) {
      throw SchemaError(at(key), e.what());
    }
  }

  void finish() const {
    for (const auto& [key, value] : object_.items()) {
      if (!seen_.count(key)) throw SchemaError(at(key), "unknown key");
    }
  }

  template <typename F>
  void validated(F check) const {
    try {
      check();
    } catch (const InvalidArgument& e) {
      throw SchemaError(path_.empty() ? "/" : path_, e.what());
    }
  }

 private:
  const json&           object_;
  std::string           path_;
  std::set<std::string> seen_;
};

std::string_view augmentationName(Augmentation::Kind kind) {
  return kind == Augmentation::Kind::NodeDrop ? "node-drop" : "edge-perturb";
}

json toJson(const Augmentation& a) {
  return {{"kind", augmentationName(a.kind)}, {"ratio", a.ratio}};
}

Augmentation augmentationFromJson(const json& object, const std::string& path, Augmentation base) {
  Reader r(object, path);
  r.named("kind", base.kind, [](const std::string& s) {
    if (s == "node-drop") return Augmentation::Kind::NodeDrop;
    if (s == "edge-perturb") return Augmentation::Kind::EdgePerturb;
    throw InvalidArgument("unknown augmentation '" + s + "' (expected node-drop or edge-perturb)");
  });
  r.number("ratio", base.ratio);
  r.finish();
  if (!(base.ratio >= 0.0 && base.ratio < 1.0)) throw SchemaError(r.at("ratio"), "must be in [0, 1)");
  return base;
}

}  // namespace

json toJson(const EncoderConfig& c) {
  return {{"layers", c.layers}, {"hidden", c.hidden}, {"atom_vocab", c.atomVocab}, {"dropout", c.dropout}};
}

EncoderConfig encoderConfigFromJson(const json& object, const std::string& path, EncoderConfig base) {
  Reader r(object, path);
  r.integer("layers", base.layers, 1);
  r.integer("hidden", base.hidden, 1);
  r.integer("atom_vocab", base.atomVocab, 2);
  r.number("dropout", base.dropout);
  r.finish();
  r.validated([&] { base.validate(); });
  return base;
}

json toJson(const LossConfig& c) {
  // lambda and base only act in Combined mode; leaving them out elsewhere keeps snapshots of
  // equivalent runs identical.
  json out = {{"mode", lossModeName(c.mode)}, {"tau", c.tau}};
  if (c.mode == LossMode::Combined) {
    out["lambda"] = c.lambda;
    out["base"]   = lossModeName(c.base);
  }
  return out;
}

LossConfig lossConfigFromJson(const json& object, const std::string& path, LossConfig base) {
  Reader r(object, path);
  r.named("mode", base.mode, [](const std::string& s) { return lossModeFromName(s); });
  r.named("base", base.base, [](const std::string& s) { return lossModeFromName(s); });
  r.number("tau", base.tau);
  r.number("lambda", base.lambda);
  r.finish();
  r.validated([&] { base.validate(); });
  return base;
}

json toJson(const FingerprintSpec& s) {
  json filters = json::array();
  for (const auto& f : s.filters) filters.push_back(filterName(f));
  return {{"filters", filters},         {"vectorizer", vectorizerName(s.vectorizer)},
          {"resolution", s.resolution}, {"sigma", s.sigma},
          {"landscape_k", s.landscapeK}, {"samples", s.samples},
          {"power", s.power}};
}

FingerprintSpec fingerprintSpecFromJson(const json& object, const std::string& path, FingerprintSpec base) {
  Reader r(object, path);
  if (const json* f = r.find("filters")) {
    try {
      if (f->is_string()) {
        base.filters = filterPreset(f->get<std::string>());
      } else if (f->is_array() && !f->empty()) {
        base.filters.clear();
        for (std::size_t i = 0; i < f->size(); ++i) {
          if (!(*f)[i].is_string()) throw SchemaError(r.at("filters") + "/" + std::to_string(i), "must be a string");
          base.filters.push_back(filterKindFromName((*f)[i].get<std::string>()));
        }
      } else {
        throw SchemaError(r.at("filters"), "must be a preset name or a nonempty array of filter names");
      }
    } catch (const InvalidArgument& e) {
      throw SchemaError(r.at("filters"), e.what());
    }
  }
  r.named("vectorizer", base.vectorizer, [](const std::string& s) { return vectorizerFromName(s); });
  r.integer("resolution", base.resolution, 1);
  r.number("sigma", base.sigma);
  r.integer("landscape_k", base.landscapeK, 1);
  r.integer("samples", base.samples, 2);
  r.number("power", base.power);
  r.finish();
  if (base.sigma < 0.0) throw SchemaError(r.at("sigma"), "must be >= 0 (0 selects the default)");
  if (!(base.power > 0.0)) throw SchemaError(r.at("power"), "must be positive");
  return base;
}

json toJson(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batchSize},
          {"learning_rate", c.learningRate},
          {"projection_dim", c.projectionDim},
          {"view_i", toJson(c.viewI)},
          {"view_j", toJson(c.viewJ)}};
}

TrainConfig trainConfigFromJson(const json& object, const std::string& path, TrainConfig base) {
  Reader r(object, path);
  r.integer("epochs", base.epochs, 1);
  r.integer("batch_size", base.batchSize, 1);
  r.number("learning_rate", base.learningRate);
  r.integer("projection_dim", base.projectionDim, 0);
  if (const json* v = r.find("view_i")) base.viewI = augmentationFromJson(*v, r.at("view_i"), base.viewI);
  if (const json* v = r.find("view_j")) base.viewJ = augmentationFromJson(*v, r.at("view_j"), base.viewJ);
  r.finish();
  if (!(base.learningRate > 0.0)) throw SchemaError(r.at("learning_rate"), "must be positive");
  return base;
}

json toJson(const ProbeConfig& c) {
  return {{"mode", probeModeName(c.mode)},
          {"task", c.task},
          {"epochs", c.epochs},
          {"batch_size", c.batchSize},
          {"learning_rate", c.learningRate},
          {"split", {{"train", c.split.train}, {"valid", c.split.valid}, {"test", c.split.test}}}};
}

ProbeConfig probeConfigFromJson(const json& object, const std::string& path, ProbeConfig base) {
  Reader r(object, path);
  r.named("mode", base.mode, [](const std::string& s) { return probeModeFromName(s); });
  r.integer("task", base.task, 0);
  r.integer("epochs", base.epochs, 1);
  r.integer("batch_size", base.batchSize, 1);
  r.number("learning_rate", base.learningRate);
  if (const json* s = r.find("split")) {
    Reader sr(*s, r.at("split"));
    sr.number("train", base.split.train);
    sr.number("valid", base.split.valid);
    sr.number("test", base.split.test);
    sr.finish();
  }
  r.finish();
  r.validated([&] { base.validate(); });
  return base;
}

void RunConfig::syncSeeds() {
  train.seed = seed;
  probe.seed = seed;
}

RunConfig parseRunConfig(const json& document) {
  Reader    r(document, "");
  RunConfig c;
  r.string("extends", c.preset);
  Profile profile;
  try {
    profile = profileFromName(c.preset);
  } catch (const InvalidArgument& e) {
    throw SchemaError("/extends", e.what());
  }
  c.encoder = profile.encoder;
  c.train   = profile.train;
  if (const json* d = r.find("dataset")) {
    Reader        dr(*d, "/dataset");
    DatasetSource src;
    std::string   p;
    if (!dr.string("path", p)) throw SchemaError("/dataset/path", "required");
    src.path = p;
    dr.named("format", src.format, [](const std::string& s) { return datasetFormatFromName(s); });
    dr.finish();
    c.dataset = src;
  }
  std::string s;
  if (r.string("external_fingerprints", s)) c.externalFingerprints = s;
  if (r.string("checkpoint", s)) c.checkpoint = s;
  if (r.string("embeddings", s)) c.embeddings = s;
  if (r.string("out", s)) c.outDir = s;
  r.u64("seed", c.seed);
  int jobs = 0;
  r.integer("jobs", jobs, 0);
  c.jobs = static_cast<unsigned>(jobs);
  if (const json* v = r.find("encoder")) c.encoder = encoderConfigFromJson(*v, "/encoder", c.encoder);
  if (const json* v = r.find("train")) c.train = trainConfigFromJson(*v, "/train", c.train);
  if (const json* v = r.find("loss")) c.train.loss = lossConfigFromJson(*v, "/loss", c.train.loss);
  if (const json* v = r.find("fingerprint")) c.train.fingerprint = fingerprintSpecFromJson(*v, "/fingerprint", c.train.fingerprint);
  if (const json* v = r.find("probe")) c.probe = probeConfigFromJson(*v, "/probe", c.probe);
  if (const json* v = r.find("eval")) {
    Reader er(*v, "/eval");
    er.size("pairs", c.eval.pairs, 1);
    er.size("bins", c.eval.bins, 1);
    er.integer("k", c.eval.k, 1);
    er.finish();
  }
  r.finish();
  c.syncSeeds();
  return c;
}

RunConfig loadRunConfig(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(readFile(path));
  } catch (const json::parse_error& e) {
    throw SchemaError("/", std::string("invalid JSON in ") + path.string() + ": " + e.what());
  }
  return parseRunConfig(doc);
}

json toJson(const RunConfig& c) {
  json out;
  out["extends"] = c.preset;
  if (c.dataset) {
    out["dataset"] = {{"path", c.dataset->path.generic_string()},
                      {"format", c.dataset->format == DatasetFormat::CsvSmiles ? "csv-smiles" : "jsonl"}};
  }
  if (!c.externalFingerprints.empty()) out["external_fingerprints"] = c.externalFingerprints.generic_string();
  if (!c.checkpoint.empty()) out["checkpoint"] = c.checkpoint.generic_string();
  if (!c.embeddings.empty()) out["embeddings"] = c.embeddings.generic_string();
  out["out"]         = c.outDir.generic_string();
  out["seed"]        = c.seed;
  out["jobs"]        = c.jobs;
  out["encoder"]     = toJson(c.encoder);
  out["train"]       = toJson(c.train);
  out["loss"]        = toJson(c.train.loss);
  out["fingerprint"] = toJson(c.train.fingerprint);
  out["probe"]       = toJson(c.probe);
  out["eval"]        = {{"pairs", c.eval.pairs}, {"bins", c.eval.bins}, {"k", c.eval.k}};
  return out;
}

}  // namespace topocl
