// SPDX-License-Identifier: Apache-2.0

#include "cli.h"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "topocl/config.h"
#include "topocl/dataset.h"
#include "topocl/evalprobe.h"
#include "topocl/io_util.h"
#include "topocl/linalg.h"
#include "topocl/losses.h"
#include "topocl/manifest.h"
#include "topocl/smiles.h"
#include "topocl/trainer.h"
#include "topocl/vectorize.h"

namespace topocl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exitCodeFor(const std::exception& error) {
  if (dynamic_cast<const NonFiniteLoss*>(&error) || dynamic_cast<const DegenerateVariance*>(&error) ||
      dynamic_cast<const DegenerateLabels*>(&error) || dynamic_cast<const EigenNonConvergence*>(&error) ||
      dynamic_cast<const ZeroNorm*>(&error)) {
    return kExitNumeric;
  }
  if (dynamic_cast<const Error*>(&error) || dynamic_cast<const json::exception*>(&error)) {
    return kExitValidation;
  }
  return kExitInternal;
}

namespace {

//! Flag values as given; unset options leave the config document untouched.
struct Flags {
  std::string                  config;
  std::optional<std::string>   preset;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned>      jobs;
  std::optional<std::string>   out;
  std::optional<std::string>   dataset;
  std::optional<std::string>   format;
  std::optional<std::string>   filters;
  std::optional<std::string>   vectorizer;
  std::optional<int>           resolution;
  std::optional<std::string>   loss;
  std::optional<std::string>   base;
  std::optional<double>        lambda;
  std::optional<double>        tau;
  std::optional<int>           epochs;
  std::optional<int>           batchSize;
  std::optional<double>        learningRate;
  std::optional<std::string>   checkpoint;
  std::optional<std::string>   embeddings;
  std::optional<std::string>   externalFingerprints;
  std::optional<std::string>   mode;
  std::optional<int>           task;
  std::optional<std::size_t>   pairs;
  std::optional<std::size_t>   bins;
  std::string                  by = "fingerprint";
};

//! Applies flags to the JSON document before schema validation, so overrides are checked by the
//! same reader as config files and errors carry the same JSON pointer paths.
json mergedDocument(const Flags& f, const std::string& subcommand) {
  json doc = json::object();
  if (!f.config.empty()) {
    try {
      doc = json::parse(readFile(f.config));
    } catch (const json::parse_error& e) {
      throw SchemaError("/", "invalid JSON in " + f.config + ": " + e.what());
    }
    if (!doc.is_object()) throw SchemaError("/", "config must be a JSON object");
  }
  auto section = [&doc](const char* key) -> json& {
    json& s = doc[key];
    if (s.is_null()) s = json::object();
    if (!s.is_object()) throw SchemaError(std::string("/") + key, "expected an object");
    return s;
  };
  if (f.preset) doc["extends"] = *f.preset;
  if (f.seed) doc["seed"] = *f.seed;
  if (f.jobs) doc["jobs"] = *f.jobs;
  if (f.out) doc["out"] = *f.out;
  if (f.dataset) section("dataset")["path"] = *f.dataset;
  if (f.format) section("dataset")["format"] = *f.format;
  if (f.filters) {
    // A single name is a preset (or one filter); a comma list names filters in order.
    if (f.filters->find(',') == std::string::npos) {
      section("fingerprint")["filters"] = *f.filters;
    } else {
      json list = json::array();
      std::stringstream ss(*f.filters);
      for (std::string item; std::getline(ss, item, ',');) list.push_back(trim(item));
      section("fingerprint")["filters"] = list;
    }
  }
  if (f.vectorizer) section("fingerprint")["vectorizer"] = *f.vectorizer;
  if (f.resolution) section("fingerprint")["resolution"] = *f.resolution;
  if (f.loss) section("loss")["mode"] = *f.loss;
  if (f.base) section("loss")["base"] = *f.base;
  if (f.lambda) section("loss")["lambda"] = *f.lambda;
  if (f.tau) section("loss")["tau"] = *f.tau;
  // Training knobs address the stage the subcommand runs.
  const char* stage = subcommand == "probe" || subcommand == "finetune" ? "probe" : "train";
  if (f.epochs) section(stage)["epochs"] = *f.epochs;
  if (f.batchSize) section(stage)["batch_size"] = *f.batchSize;
  if (f.learningRate) section(stage)["learning_rate"] = *f.learningRate;
  if (f.checkpoint) doc["checkpoint"] = *f.checkpoint;
  if (f.embeddings) doc["embeddings"] = *f.embeddings;
  if (f.externalFingerprints) doc["external_fingerprints"] = *f.externalFingerprints;
  if (f.mode) section("probe")["mode"] = *f.mode;
  if (f.task) section("probe")["task"] = *f.task;
  if (f.pairs) section("eval")["pairs"] = *f.pairs;
  if (f.bins) section("eval")["bins"] = *f.bins;
  return doc;
}

//! Config snapshot for the manifest: `out` and `jobs` do not change any output byte.
json snapshot(const RunConfig& c) {
  json j = toJson(c);
  j.erase("out");
  j.erase("jobs");
  return j;
}

class Run {
 public:
  Run(std::string subcommand, RunConfig config, const Flags& flags, std::ostream& out, std::ostream& err)
      : name_(std::move(subcommand)),
        c_(std::move(config)),
        flags_(flags),
        out_(out),
        err_(err),
        manifest_(name_, snapshot(c_), c_.seed) {
    if (!flags_.config.empty()) manifest_.addInput("config", flags_.config);
  }

  void execute() {
    c_.train.validate();
    c_.probe.validate();
    fs::create_directories(c_.outDir);
    if (name_ == "fingerprint") {
      fingerprint();
    } else if (name_ == "pretrain") {
      pretrainStage();
    } else if (name_ == "probe" || name_ == "finetune") {
      probeStage();
    } else if (name_ == "distances") {
      distances();
    } else if (name_ == "spectra") {
      spectra();
    } else if (name_ == "hist") {
      hist();
    }
    manifest_.write(c_.outDir);
    out_ << "wrote " << (c_.outDir / "manifest.json").string() << '\n';
  }

 private:
  const Dataset& dataset() {
    if (!loaded_) {
      if (!c_.dataset) throw SchemaError("/dataset/path", "required by " + name_);
      LoadResult res = loadDataset(c_.dataset->path, c_.dataset->format);
      for (const std::string& line : res.report.failures) err_ << "skipped " << line << '\n';
      manifest_.addInput("dataset", c_.dataset->path);
      manifest_.set("rows_read", res.report.rowsRead);
      manifest_.set("rows_skipped", res.report.rowsSkipped);
      loaded_ = std::move(res.dataset);
    }
    return *loaded_;
  }

  std::vector<MolGraph> graphs() {
    std::vector<MolGraph> g;
    for (const Record& r : dataset().records) g.push_back(r.graph);
    return g;
  }

  std::vector<std::string> datasetIds() {
    std::vector<std::string> ids;
    for (const Record& r : dataset().records) ids.push_back(r.id);
    return ids;
  }

  //! Rows of an `id,f0,...` file in the order of `ids`; every id must be present.
  Matrix alignedRows(const fs::path& path, const char* role, const char* schemaPath, const std::vector<std::string>& ids) {
    const std::map<std::string, TopoFingerprint> rows = ingestExternalFingerprints(path);
    manifest_.addInput(role, path);
    Matrix m;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      auto it = rows.find(ids[i]);
      if (it == rows.end()) throw SchemaError(schemaPath, "no row for id '" + ids[i] + "' in " + path.string());
      if (i == 0) m.resize(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(it->second.values.size()));
      for (std::size_t j = 0; j < it->second.values.size(); ++j) {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = it->second.values[j];
      }
    }
    return m;
  }

  //! Sample ids: the dataset's when one is configured, otherwise the embedding file's (sorted).
  std::vector<std::string> sampleIds() {
    if (c_.dataset) return datasetIds();
    if (c_.embeddings.empty()) throw SchemaError("/dataset/path", "required by " + name_ + " without embeddings");
    std::vector<std::string> ids;
    for (const auto& [id, row] : ingestExternalFingerprints(c_.embeddings)) ids.push_back(id);
    return ids;
  }

  Matrix embeddings(const std::vector<std::string>& ids) {
    if (!c_.embeddings.empty()) return alignedRows(c_.embeddings, "embeddings", "/embeddings", ids);
    if (c_.checkpoint.empty()) throw SchemaError("/checkpoint", "required by " + name_ + " (or set embeddings)");
    const Checkpoint ckpt = loadCheckpoint(c_.checkpoint);
    manifest_.addInput("checkpoint", c_.checkpoint);
    const std::vector<MolGraph> g = graphs();
    return embedGraphs(ckpt.parameters, checkpointEncoder(ckpt), g);
  }

  Matrix fingerprintMatrix(const std::vector<std::string>& ids) {
    if (!c_.externalFingerprints.empty()) {
      return alignedRows(c_.externalFingerprints, "external_fingerprints", "/external_fingerprints", ids);
    }
    const std::vector<MolGraph> g   = graphs();
    const CorpusFingerprints    fps = fingerprintCorpus(g, c_.train.fingerprint, c_.jobs);
    return toMatrix(fps.rows);
  }

  static Matrix toMatrix(const std::vector<TopoFingerprint>& rows) {
    const std::size_t w = rows.empty() ? 0 : rows[0].values.size();
    Matrix            m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(w));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].values.size() != w) throw LengthMismatch("fingerprint rows differ in width");
      for (std::size_t j = 0; j < w; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i].values[j];
    }
    return m;
  }

  static std::vector<TopoFingerprint> toRows(const Matrix& m) {
    std::vector<TopoFingerprint> rows(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows[static_cast<std::size_t>(i)].values.assign(m.row(i).begin(), m.row(i).end());
    return rows;
  }

  //! Fingerprints for training: computed in the corpus frame, or external rows matched by id.
  CorpusFingerprints trainingFingerprints() {
    const std::vector<MolGraph> g = graphs();
    if (c_.externalFingerprints.empty()) return fingerprintCorpus(g, c_.train.fingerprint, c_.jobs);
    if (usesViews(c_.train.loss)) {
      throw SchemaError("/external_fingerprints", "view losses need fingerprints of augmented graphs; compute them instead");
    }
    CorpusFingerprints fps;
    fps.rows = toRows(alignedRows(c_.externalFingerprints, "external_fingerprints", "/external_fingerprints", datasetIds()));
    return fps;
  }

  void emit(const std::string& file, std::string_view bytes) {
    const fs::path p = c_.outDir / file;
    writeFile(p, bytes);
    manifest_.addOutput(c_.outDir, p);
  }

  void fingerprint() {
    const std::vector<MolGraph>  g   = graphs();
    const CorpusFingerprints     fps = fingerprintCorpus(g, c_.train.fingerprint, c_.jobs);
    const std::vector<std::string> ids = datasetIds();
    emit("fingerprints.csv", fingerprintsToCsv(ids, fps.rows));
    out_ << "rows=" << fps.rows.size() << " width=" << (fps.rows.empty() ? 0 : fps.rows[0].values.size()) << '\n';
  }

  void pretrainStage() {
    const std::vector<MolGraph> g   = graphs();
    const CorpusFingerprints    fps = trainingFingerprints();
    PretrainOptions opts;
    opts.outDir = c_.outDir;
    const PretrainResult res = pretrain(g, fps, c_.encoder, c_.train, opts);
    for (const char* f : {"loss_curve.csv", "checkpoint_best.ckpt", "checkpoint_final.ckpt"}) {
      manifest_.addOutput(c_.outDir, c_.outDir / f);
    }
    const Matrix z = embedGraphs(res.finalParameters, c_.encoder, g);
    emit("embeddings.csv", fingerprintsToCsv(datasetIds(), toRows(z)));
    const auto best = std::find_if(res.curve.begin(), res.curve.end(), [&](const EpochRecord& r) { return r.epoch == res.bestEpoch; });
    out_ << "best_epoch=" << res.bestEpoch << " best_loss=" << formatDouble(best->loss) << " final_loss=" << formatDouble(res.curve.back().loss) << '\n';
  }

  void probeStage() {
    if (c_.checkpoint.empty()) throw SchemaError("/checkpoint", "required by " + name_);
    ProbeConfig pc = c_.probe;
    if (name_ == "finetune") {
      pc.mode = ProbeMode::Full;
    } else if (pc.mode == ProbeMode::Full) {
      throw SchemaError("/probe/mode", "mode 'full' is run by the finetune subcommand");
    }
    const Checkpoint    ckpt    = loadCheckpoint(c_.checkpoint);
    manifest_.addInput("checkpoint", c_.checkpoint);
    const EncoderConfig encoder = checkpointEncoder(ckpt);
    const ProbeResult   res     = finetuneOrProbe(ckpt.parameters, encoder, dataset(), pc);
    emit("probe_metrics.csv", probeMetricsToCsv(res, pc.mode));
    emit("probe_curve.csv", probeCurveToCsv(res));
    if (name_ == "finetune") {
      emit("checkpoint_finetuned.ckpt", serializeCheckpoint(makeCheckpoint(res.parameters, encoder, "finetune", res.bestEpoch, c_.train.loss)));
    }
    out_ << "best_epoch=" << res.bestEpoch << " valid_" << res.metric << '=' << formatDouble(res.validMetric) << " test_"
         << res.metric << '=' << formatDouble(res.testMetric) << '\n';
  }

  void distances() {
    const std::vector<std::string> ids = sampleIds();
    const Matrix                   z   = embeddings(ids);
    const Matrix                   fp  = fingerprintMatrix(ids);
    const DistanceCorrelation      dc  = pearsonDistanceCorrelation(z, fp, c_.eval.pairs, c_.seed);
    DistanceProbeConfig            pcfg;
    pcfg.maxPairs           = c_.eval.pairs;
    pcfg.seed               = c_.seed;
    const DistanceProbeResult pr = distanceRegressionProbe(z, fp, pcfg);
    // Distances again on the embeddings from linear probing (held-out predicted fingerprints).
    const DistanceCorrelation lp = probedDistanceCorrelation(z, fp, c_.eval.pairs, {0.2, c_.seed});
    std::string csv =
        "pairs,pearson_r,linear_probe_pairs,linear_probe_pearson_r,probe_test_mse,probe_target_variance,probe_train_pairs,"
        "probe_test_pairs\n";
    csv += std::to_string(dc.pairs) + ',' + formatDouble(dc.r) + ',' + std::to_string(lp.pairs) + ',' + formatDouble(lp.r) + ',' +
           formatDouble(pr.testMse) + ',' + formatDouble(pr.targetVariance) + ',' + std::to_string(pr.trainPairs) + ',' +
           std::to_string(pr.testPairs) + '\n';
    emit("distances.csv", csv);
    out_ << "pearson_r=" << formatDouble(dc.r) << " pairs=" << dc.pairs << " linear_probe_pearson_r=" << formatDouble(lp.r)
         << " probe_test_mse=" << formatDouble(pr.testMse) << '\n';
  }

  void spectra() {
    const Matrix             z = embeddings(sampleIds());
    const CovarianceSpectrum s = covarianceSingularValues(z);
    emit("spectrum.csv", spectrumToCsv(s));
    const auto live = std::count(s.collapsed.begin(), s.collapsed.end(), false);
    out_ << "non_collapsed=" << live << " of " << s.values.size() << '\n';
  }

  void hist() {
    const std::vector<std::string> ids = sampleIds();
    Matrix                         z   = embeddings(ids);
    std::vector<int>               classes;
    manifest_.set("hist_classes", flags_.by);
    if (flags_.by == "label") {
      const Dataset& d    = dataset();
      const int      task = c_.probe.task;
      if (task >= d.taskCount) throw SchemaError("/probe/task", "dataset has " + std::to_string(d.taskCount) + " label columns");
      std::vector<Eigen::Index> keep;
      for (std::size_t i = 0; i < d.size(); ++i) {
        const Label& l = d.records[i].labels[static_cast<std::size_t>(task)];
        if (!l) continue;
        if (*l != std::floor(*l)) throw InvalidArgument("class labels must be integers; row " + d.records[i].id);
        keep.push_back(static_cast<Eigen::Index>(i));
        classes.push_back(static_cast<int>(*l));
      }
      Matrix kept(static_cast<Eigen::Index>(keep.size()), z.cols());
      for (std::size_t r = 0; r < keep.size(); ++r) kept.row(static_cast<Eigen::Index>(r)) = z.row(keep[r]);
      z = std::move(kept);
    } else {
      classes = classesFromFingerprints(fingerprintMatrix(ids));
    }
    AlignmentConfig acfg;
    acfg.pairs = c_.eval.pairs;
    acfg.bins  = c_.eval.bins;
    acfg.seed  = c_.seed;
    const PairHistogram h = alignmentHistograms(z, classes, acfg);
    emit("alignment.csv", alignmentToCsv(h));
    emit("alignment.gp", alignmentToGnuplot(h));
    out_ << "bins=" << c_.eval.bins << '\n';
  }

  std::string             name_;
  RunConfig               c_;
  const Flags&            flags_;
  std::ostream&           out_;
  std::ostream&           err_;
  RunManifest             manifest_;
  std::optional<Dataset>  loaded_;
};

void addCommon(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON run config");
  sub->add_option("--preset", f.preset, "base preset: desk or paper");
  sub->add_option("--seed", f.seed, "run seed");
  sub->add_option("--jobs", f.jobs, "fingerprint workers (0 = logical cores)");
  sub->add_option("--out", f.out, "output directory");
  sub->add_option("--dataset", f.dataset, "dataset path");
  sub->add_option("--format", f.format, "dataset format: csv or jsonl");
  sub->add_option("--filters", f.filters, "filter preset or comma list (atom, degree, hks:<t>)");
  sub->add_option("--vectorizer", f.vectorizer, "pi, landscape or silhouette");
  sub->add_option("--resolution", f.resolution, "persistence image resolution");
  sub->add_option("--external-fingerprints", f.externalFingerprints, "fingerprint CSV used instead of computing");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Topological fingerprints and contrastive pre-training for molecular graphs", "topocl"};
  app.require_subcommand(1);
  Flags f;

  auto* fingerprint = app.add_subcommand("fingerprint", "write fingerprints.csv for a dataset");
  auto* pretrainCmd = app.add_subcommand("pretrain", "self-supervised pre-training");
  auto* probe       = app.add_subcommand("probe", "frozen-backbone linear or MLP probe");
  auto* finetune    = app.add_subcommand("finetune", "fine-tune every parameter on a labelled task");
  auto* distancesCmd = app.add_subcommand("distances", "embedding vs fingerprint distance correlation and probe");
  auto* spectraCmd  = app.add_subcommand("spectra", "covariance spectrum of embeddings");
  auto* histCmd     = app.add_subcommand("hist", "alignment histograms of positive and negative pairs");
  for (CLI::App* sub : {fingerprint, pretrainCmd, probe, finetune, distancesCmd, spectraCmd, histCmd}) addCommon(sub, f);
  for (CLI::App* sub : {pretrainCmd}) {
    sub->add_option("--loss", f.loss, "tdl, tdl-views, tae, ntxent or combined");
    sub->add_option("--base", f.base, "base loss of combined mode");
    sub->add_option("--lambda", f.lambda, "weight of the topological term in combined mode");
    sub->add_option("--tau", f.tau, "temperature");
  }
  for (CLI::App* sub : {pretrainCmd, probe, finetune}) {
    sub->add_option("--epochs", f.epochs, "epochs of the stage");
    sub->add_option("--batch-size", f.batchSize, "batch size of the stage");
    sub->add_option("--lr", f.learningRate, "learning rate of the stage");
  }
  for (CLI::App* sub : {probe, finetune, distancesCmd, spectraCmd, histCmd}) {
    sub->add_option("--checkpoint", f.checkpoint, "pre-trained checkpoint");
  }
  for (CLI::App* sub : {probe, finetune}) {
    sub->add_option("--task", f.task, "label column index");
  }
  probe->add_option("--mode", f.mode, "linear or mlp");
  for (CLI::App* sub : {distancesCmd, spectraCmd, histCmd}) {
    sub->add_option("--embeddings", f.embeddings, "embedding CSV used instead of a checkpoint");
  }
  for (CLI::App* sub : {distancesCmd, histCmd}) sub->add_option("--pairs", f.pairs, "pair cap");
  histCmd->add_option("--bins", f.bins, "histogram bins");
  histCmd->add_option("--by", f.by, "pair classes from 'fingerprint' equality or the 'label' column")
      ->check(CLI::IsMember({"fingerprint", "label"}));
  if (args.empty()) {
    out << app.help();
    return kExitValidation;
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    RunConfig config = parseRunConfig(mergedDocument(f, name));
    Run(name, std::move(config), f, out, err).execute();
    return kExitOk;
  } catch (const std::exception& e) {
    const int code = exitCodeFor(e);
    err << "topocl " << name << ": " << e.what() << '\n';
    return code;
  }
}

int runMain(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace topocl::cli
