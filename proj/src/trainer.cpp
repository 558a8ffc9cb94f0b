// SPDX-License-Identifier: Apache-2.0

#include "topocl/trainer.h"

#include <cmath>
#include <numeric>

#include "topocl/config.h"
#include "topocl/evalprobe.h"
#include "topocl/graph_json.h"
#include "topocl/io_util.h"
#include "topocl/rng.h"

namespace topocl {

namespace {

// Seed streams derived from TrainConfig::seed / ProbeConfig::seed.
constexpr std::uint64_t kInitStream    = 0;
constexpr std::uint64_t kShuffleStream = 1;
constexpr std::uint64_t kDropoutStream = 2;
constexpr std::uint64_t kViewStream    = 3;

bool needsTaeHead(const LossConfig& loss) {
  return loss.mode == LossMode::TAE || (loss.mode == LossMode::Combined && loss.base == LossMode::TAE);
}

Matrix fingerprintRows(const CorpusFingerprints& fps, std::span<const std::size_t> indices) {
  const auto width = static_cast<Eigen::Index>(fps.rows.at(indices.front()).values.size());
  Matrix     out(static_cast<Eigen::Index>(indices.size()), width);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto& v = fps.rows[indices[r]].values;
    if (static_cast<Eigen::Index>(v.size()) != width) throw LengthMismatch("fingerprint rows differ in width");
    out.row(static_cast<Eigen::Index>(r)) = Eigen::Map<const Vector>(v.data(), width).transpose();
  }
  return out;
}

Matrix stackRows(const std::vector<TopoFingerprint>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().values.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) =
        Eigen::Map<const Vector>(rows[r].values.data(), static_cast<Eigen::Index>(rows[r].values.size())).transpose();
  }
  return out;
}

std::vector<std::vector<std::size_t>> makeBatches(std::vector<std::size_t> order, int batchSize, bool contrastive) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batchSize)) {
    const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batchSize));
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  if (contrastive && out.size() > 1 && out.back().size() == 1) {
    out[out.size() - 2].push_back(out.back().front());
    out.pop_back();
  }
  return out;
}

void dumpBatch(const std::filesystem::path& dir, const PretrainBatch& batch, int epoch, double loss) {
  nlohmann::json doc;
  doc["epoch"]   = epoch;
  doc["loss"]    = formatDouble(loss);
  doc["indices"] = batch.indices;
  auto& graphs   = doc["graphs"] = nlohmann::json::array();
  for (const auto& g : batch.graphs) graphs.push_back(graphToJson(g));
  writeFile(dir / "nonfinite_batch.json", doc.dump(2) + "\n");
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (!(learningRate > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (batchSize < (isContrastive(loss) ? 2 : 1)) throw InvalidArgument("batch size must be >= 2 for contrastive losses");
  if (projectionDim < 0) throw InvalidArgument("projection dim must be >= 0");
  for (const Augmentation* a : {&viewI, &viewJ}) {
    if (!(a->ratio >= 0.0 && a->ratio < 1.0)) throw InvalidArgument("augmentation ratio must be in [0, 1)");
  }
  loss.validate();
}

bool isContrastive(const LossConfig& loss) {
  return loss.mode != LossMode::TAE;
}

bool usesViews(const LossConfig& loss) {
  auto viewMode = [](LossMode m) { return m == LossMode::TDLViews || m == LossMode::NTXent; };
  return viewMode(loss.mode) || (loss.mode == LossMode::Combined && viewMode(loss.base));
}

Profile deskProfile() {
  Profile p;
  p.name              = "desk";
  p.encoder.layers    = 3;
  p.encoder.hidden    = 64;
  p.train.batchSize   = 64;
  return p;
}

Profile paperProfile() {
  Profile p;
  p.name            = "paper";
  p.encoder.layers  = 5;
  p.encoder.hidden  = 300;
  p.train.batchSize = 256;
  p.train.epochs    = 100;
  return p;
}

Profile profileFromName(std::string_view name) {
  if (name == "desk") return deskProfile();
  if (name == "paper") return paperProfile();
  throw InvalidArgument("unknown profile '" + std::string(name) + "' (expected desk or paper)");
}

ParameterSet initPretrainParameters(const EncoderConfig& encoder, const TrainConfig& train, int fingerprintWidth) {
  encoder.validate();
  ParameterSet params;
  Rng          rng(deriveSeed(train.seed, kInitStream));
  initEncoder(params, encoder, rng);
  const int proj = train.projectionDim > 0 ? train.projectionDim : encoder.hidden;
  initHead(params, "head", encoder.hidden, encoder.hidden, proj, rng);
  if (needsTaeHead(train.loss)) initHead(params, "tae_head", encoder.hidden, encoder.hidden, fingerprintWidth, rng);
  return params;
}

PretrainBatch makePretrainBatch(std::span<const MolGraph> corpus, const CorpusFingerprints& fingerprints,
                                std::span<const std::size_t> indices, int epoch, const TrainConfig& config) {
  if (indices.empty()) throw BatchTooSmall("empty batch");
  PretrainBatch b;
  b.indices.assign(indices.begin(), indices.end());
  for (std::size_t i : indices) b.graphs.push_back(corpus[i]);
  b.fingerprints = fingerprintRows(fingerprints, indices);
  const auto ep  = static_cast<std::uint64_t>(epoch);
  b.dropoutSeed  = deriveSeed(deriveSeed(deriveSeed(config.seed, kDropoutStream), ep), indices.front());
  if (usesViews(config.loss)) {
    const std::uint64_t viewSeed = deriveSeed(deriveSeed(config.seed, kViewStream), ep);
    for (std::size_t i : indices) {
      b.viewI.push_back(augment(corpus[i], config.viewI, deriveSeed(viewSeed, 2 * i)).graph);
      b.viewJ.push_back(augment(corpus[i], config.viewJ, deriveSeed(viewSeed, 2 * i + 1)).graph);
    }
  }
  const bool viewFingerprints =
      config.loss.mode == LossMode::TDLViews || (config.loss.mode == LossMode::Combined && config.loss.base == LossMode::TDLViews);
  if (viewFingerprints) {
    if (fingerprints.ranges.empty()) throw InvalidArgument("TDL over views needs computed fingerprints, not ingested ones");
    std::vector<TopoFingerprint> fi, fj;
    for (std::size_t r = 0; r < indices.size(); ++r) {
      fi.push_back(fingerprintInFrame(b.viewI[r], config.fingerprint, fingerprints));
      fj.push_back(fingerprintInFrame(b.viewJ[r], config.fingerprint, fingerprints));
    }
    b.viewFingerprintsI = stackRows(fi);
    b.viewFingerprintsJ = stackRows(fj);
  }
  return b;
}

ad::Var pretrainLoss(ad::Tape& tape, const BoundParameters& params, const PretrainBatch& batch, const EncoderConfig& encoder,
                     const TrainConfig& config) {
  auto pass = [&](const std::vector<MolGraph>& graphs, std::uint64_t stream, GraphBatch& packed) {
    packed = makeBatch(std::span<const MolGraph>(graphs), encoder);
    Rng rng(deriveSeed(batch.dropoutSeed, stream));
    return encode(tape, params, packed, encoder, encoder.dropout > 0.0 ? &rng : nullptr);
  };
  auto project = [&](const std::vector<MolGraph>& graphs, std::uint64_t stream) {
    GraphBatch packed;
    return applyHead(params, "head", pass(graphs, stream, packed).graphs);
  };
  const double tau  = config.loss.tau;
  auto         term = [&](LossMode mode) -> ad::Var {
    switch (mode) {
      case LossMode::TDL:
        return tdlLoss(tape, project(batch.graphs, 0), pairwiseDistances(batch.fingerprints), tau);
      case LossMode::TDLViews:
        return tdlViewsLoss(tape, project(batch.viewI, 1), project(batch.viewJ, 2),
                            crossDistances(batch.viewFingerprintsI, batch.viewFingerprintsJ), tau);
      case LossMode::NTXent:
        return ntxentLoss(tape, project(batch.viewI, 1), project(batch.viewJ, 2), tau);
      case LossMode::TAE: {
        // Project every node, then read out.
        GraphBatch packed;
        const auto out = pass(batch.graphs, 3, packed);
        return taeLoss(tape, meanReadout(tape, applyHead(params, "tae_head", out.nodes), packed), batch.fingerprints);
      }
      case LossMode::Combined:
        break;
    }
    throw InvalidArgument("combined loss cannot nest");
  };
  if (config.loss.mode == LossMode::Combined) {
    return combinedLoss(term(config.loss.base), term(LossMode::TDL), config.loss.lambda);
  }
  return term(config.loss.mode);
}

PretrainResult pretrain(std::span<const MolGraph> corpus, const CorpusFingerprints& fingerprints, const EncoderConfig& encoder,
                        const TrainConfig& config, const PretrainOptions& options) {
  config.validate();
  encoder.validate();
  const std::size_t n = corpus.size();
  if (fingerprints.rows.size() != n) throw LengthMismatch("fingerprint count differs from corpus size");
  const bool contrastive = isContrastive(config.loss);
  if (n < (contrastive ? 2u : 1u)) throw BatchTooSmall("corpus too small for the loss");
  const int width = static_cast<int>(fingerprints.rows.front().values.size());
  if (!options.outDir.empty()) std::filesystem::create_directories(options.outDir);

  PretrainResult result;
  result.finalParameters = initPretrainParameters(encoder, config, width);
  Adam   adam({config.learningRate});
  double bestLoss = std::numeric_limits<double>::infinity();
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffler(deriveSeed(deriveSeed(config.seed, kShuffleStream), static_cast<std::uint64_t>(epoch)));
    shuffler.shuffle(std::span(order));
    double total = 0.0;
    for (const auto& indices : makeBatches(std::move(order), config.batchSize, contrastive)) {
      const PretrainBatch batch = makePretrainBatch(corpus, fingerprints, indices, epoch, config);
      ad::Tape            tape;
      BoundParameters     bound(tape, result.finalParameters);
      const ad::Var       loss  = pretrainLoss(tape, bound, batch, encoder, config);
      const double        value = loss.scalar();
      if (!std::isfinite(value)) {
        std::string where;
        if (!options.outDir.empty()) {
          dumpBatch(options.outDir, batch, epoch, value);
          where = "; batch written to " + (options.outDir / "nonfinite_batch.json").string();
        }
        throw NonFiniteLoss("non-finite loss " + formatDouble(value) + " at epoch " + std::to_string(epoch) + where);
      }
      tape.backward(loss);
      adam.step(result.finalParameters.values(), bound.gradients());
      total += value * static_cast<double>(indices.size());
    }
    const EpochRecord rec{epoch, total / static_cast<double>(n)};
    result.curve.push_back(rec);
    if (rec.loss < bestLoss) {
      bestLoss              = rec.loss;
      result.bestEpoch      = epoch;
      result.bestParameters = result.finalParameters;
      if (!options.outDir.empty()) {
        saveCheckpoint(options.outDir / "checkpoint_best.ckpt",
                       makeCheckpoint(result.bestParameters, encoder, "pretrain", epoch, config.loss));
      }
    }
    if (options.onEpoch) options.onEpoch(rec);
  }
  if (!options.outDir.empty()) {
    writeFile(options.outDir / "loss_curve.csv", lossCurveToCsv(result.curve));
    saveCheckpoint(options.outDir / "checkpoint_final.ckpt",
                   makeCheckpoint(result.finalParameters, encoder, "pretrain", config.epochs, config.loss));
  }
  return result;
}

std::string lossCurveToCsv(const std::vector<EpochRecord>& curve) {
  std::string out = "epoch,loss\n";
  for (const auto& r : curve) out += std::to_string(r.epoch) + "," + formatDouble(r.loss) + "\n";
  return out;
}

Checkpoint makeCheckpoint(const ParameterSet& params, const EncoderConfig& encoder, const std::string& kind, int epoch,
                          const LossConfig& loss) {
  Checkpoint c;
  c.parameters = params;
  c.meta       = {{"kind", kind}, {"encoder", toJson(encoder)}, {"epoch", epoch}, {"loss", toJson(loss)}};
  return c;
}

EncoderConfig checkpointEncoder(const Checkpoint& checkpoint) {
  if (!checkpoint.meta.is_object() || !checkpoint.meta.contains("encoder")) throw SchemaError("/meta/encoder", "required");
  return encoderConfigFromJson(checkpoint.meta["encoder"], "/meta/encoder");
}

Matrix embedGraphs(const ParameterSet& params, const EncoderConfig& encoder, std::span<const MolGraph> graphs, int batchSize) {
  if (batchSize < 1) throw InvalidArgument("batch size must be positive");
  Matrix                  out(static_cast<Eigen::Index>(graphs.size()), encoder.hidden);
  const std::vector<bool> frozen(params.size(), false);
  for (std::size_t start = 0; start < graphs.size(); start += static_cast<std::size_t>(batchSize)) {
    const std::size_t end = std::min(graphs.size(), start + static_cast<std::size_t>(batchSize));
    ad::Tape          tape;
    BoundParameters   bound(tape, params, frozen);
    const GraphBatch  packed = makeBatch(graphs.subspan(start, end - start), encoder);
    out.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(end - start)) =
        encode(tape, bound, packed, encoder).graphs.value();
  }
  return out;
}

std::string_view probeModeName(ProbeMode mode) {
  switch (mode) {
    case ProbeMode::Mlp:
      return "mlp";
    case ProbeMode::Full:
      return "full";
    case ProbeMode::Linear:
      break;
  }
  return "linear";
}

ProbeMode probeModeFromName(std::string_view name) {
  for (ProbeMode m : {ProbeMode::Linear, ProbeMode::Mlp, ProbeMode::Full}) {
    if (probeModeName(m) == name) return m;
  }
  throw InvalidArgument("unknown probe mode '" + std::string(name) + "' (expected linear, mlp or full)");
}

void ProbeConfig::validate() const {
  if (epochs < 1) throw InvalidArgument("probe epochs must be >= 1");
  if (batchSize < 1) throw InvalidArgument("probe batch size must be >= 1");
  if (!(learningRate > 0.0)) throw InvalidArgument("probe learning rate must be positive");
  if (task < 0) throw InvalidArgument("task index must be >= 0");
  if (!(split.train > 0.0 && split.valid > 0.0 && split.test > 0.0) ||
      std::abs(split.train + split.valid + split.test - 1.0) > 1e-9) {
    throw InvalidArgument("split fractions must be positive and sum to 1");
  }
}

namespace {

ad::Var probeHead(const BoundParameters& params, ProbeMode mode, ad::Var x) {
  return mode == ProbeMode::Mlp ? applyHead(params, "probe", x) : applyLinear(params, "probe", x);
}

//! mean(softplus(x) - y x) with softplus(x) = relu(x) + log(1 + exp(-|x|)).
ad::Var logisticLoss(ad::Tape& tape, ad::Var logits, const Matrix& y) {
  const ad::Var pos = ad::relu(logits);
  const ad::Var abs = ad::add(pos, ad::relu(ad::neg(logits)));
  const ad::Var sp  = ad::add(pos, ad::log(ad::addScalar(ad::exp(ad::neg(abs)), 1.0)));
  return ad::mean(ad::sub(sp, ad::mul(logits, tape.constant(y))));
}

ad::Var squaredLoss(ad::Tape& tape, ad::Var pred, const Matrix& y) {
  const ad::Var d = ad::sub(pred, tape.constant(y));
  return ad::mean(ad::mul(d, d));
}

double metricOf(TaskKind task, const Vector& pred, const std::vector<double>& y, std::span<const std::size_t> idx) {
  if (task == TaskKind::Classification) {
    std::vector<double> s;
    std::vector<int>    l;
    for (std::size_t r = 0; r < idx.size(); ++r) {
      s.push_back(pred(static_cast<Eigen::Index>(r)));
      l.push_back(static_cast<int>(y[idx[r]]));
    }
    return rocAuc(s, l);
  }
  double se = 0.0;
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const double d = pred(static_cast<Eigen::Index>(r)) - y[idx[r]];
    se += d * d;
  }
  return std::sqrt(se / static_cast<double>(idx.size()));
}

}  // namespace

ProbeResult finetuneOrProbe(const ParameterSet& pretrained, const EncoderConfig& encoder, const Dataset& dataset,
                            const ProbeConfig& config) {
  config.validate();
  encoder.validate();
  if (config.task >= dataset.taskCount) {
    throw InvalidArgument("task " + std::to_string(config.task) + " outside the dataset's " + std::to_string(dataset.taskCount) + " tasks");
  }
  std::vector<MolGraph> graphs;
  std::vector<double>   y;
  for (const auto& rec : dataset.records) {
    const auto t = static_cast<std::size_t>(config.task);
    if (t < rec.labels.size() && rec.labels[t]) {
      graphs.push_back(rec.graph);
      y.push_back(*rec.labels[t]);
    }
  }
  if (graphs.size() < 3) throw InvalidArgument("probe needs at least 3 labeled records");
  ProbeResult result;
  result.samples = graphs.size();
  result.task    = std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0 || v == 1.0; }) ? TaskKind::Classification
                                                                                               : TaskKind::Regression;
  result.metric  = result.task == TaskKind::Classification ? "roc_auc" : "rmse";
  std::vector<int> classes;
  for (double v : y) classes.push_back(static_cast<int>(v));
  const SplitIndices split = randomStratifiedSplit(graphs.size(), result.task == TaskKind::Classification ? &classes : nullptr,
                                                   config.split, config.seed);

  ParameterSet params;
  for (std::size_t i = 0; i < pretrained.size(); ++i) {
    if (pretrained.names()[i].rfind("probe.", 0) != 0) params.add(pretrained.names()[i], pretrained.values()[i]);
  }
  Rng rng(deriveSeed(config.seed, kInitStream));
  if (config.mode == ProbeMode::Mlp) {
    initHead(params, "probe", encoder.hidden, encoder.hidden, 1, rng);
  } else {
    initLinear(params, "probe", encoder.hidden, 1, rng);
  }
  const bool        frozen = config.mode != ProbeMode::Full;
  std::vector<bool> mask(params.size(), true);
  if (frozen) {
    for (std::size_t i = 0; i < params.size(); ++i) mask[i] = params.names()[i].rfind("probe.", 0) == 0;
  }
  const Matrix embedded = frozen ? embedGraphs(params, encoder, graphs) : Matrix();

  auto rowsOf = [](const Matrix& m, std::span<const std::size_t> idx) {
    Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(idx[r]));
    return out;
  };
  auto forward = [&](ad::Tape& tape, const BoundParameters& bound, std::span<const std::size_t> idx) {
    if (frozen) return probeHead(bound, config.mode, tape.constant(rowsOf(embedded, idx)));
    std::vector<const MolGraph*> ptrs;
    for (std::size_t i : idx) ptrs.push_back(&graphs[i]);
    const GraphBatch packed = makeBatch(std::span<const MolGraph* const>(ptrs), encoder);
    return probeHead(bound, config.mode, encode(tape, bound, packed, encoder).graphs);
  };
  auto predict = [&](const ParameterSet& p, std::span<const std::size_t> idx) {
    ad::Tape        tape;
    BoundParameters bound(tape, p, std::vector<bool>(p.size(), false));
    return Vector(forward(tape, bound, idx).value().col(0));
  };

  Adam   adam({config.learningRate});
  double best = 0.0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<std::size_t> order = split.train;
    Rng shuffler(deriveSeed(deriveSeed(config.seed, kShuffleStream), static_cast<std::uint64_t>(epoch)));
    shuffler.shuffle(std::span(order));
    double total = 0.0;
    for (const auto& idx : makeBatches(std::move(order), config.batchSize, false)) {
      Matrix target(static_cast<Eigen::Index>(idx.size()), 1);
      for (std::size_t r = 0; r < idx.size(); ++r) target(static_cast<Eigen::Index>(r), 0) = y[idx[r]];
      ad::Tape        tape;
      BoundParameters bound(tape, params, mask);
      const ad::Var   out  = forward(tape, bound, idx);
      const ad::Var   loss = result.task == TaskKind::Classification ? logisticLoss(tape, out, target) : squaredLoss(tape, out, target);
      if (!std::isfinite(loss.scalar())) {
        throw NonFiniteLoss("non-finite probe loss at epoch " + std::to_string(epoch));
      }
      tape.backward(loss);
      adam.step(params.values(), bound.gradients(), mask);
      total += loss.scalar() * static_cast<double>(idx.size());
    }
    const double valid  = metricOf(result.task, predict(params, split.valid), y, split.valid);
    const bool   better = result.curve.empty() ||
                        (result.task == TaskKind::Classification ? valid > best : valid < best);
    result.curve.push_back({epoch, total / static_cast<double>(split.train.size()), valid});
    if (better) {
      best              = valid;
      result.bestEpoch  = epoch;
      result.parameters = params;
    }
  }
  result.validMetric = best;
  result.testMetric  = metricOf(result.task, predict(result.parameters, split.test), y, split.test);
  return result;
}

std::string probeCurveToCsv(const ProbeResult& result) {
  std::string out = "epoch,train_loss,valid_" + result.metric + "\n";
  for (const auto& e : result.curve) {
    out += std::to_string(e.epoch) + "," + formatDouble(e.trainLoss) + "," + formatDouble(e.validMetric) + "\n";
  }
  return out;
}

std::string probeMetricsToCsv(const ProbeResult& result, ProbeMode mode) {
  return "mode,task,best_epoch,valid_" + result.metric + ",test_" + result.metric + ",samples\n" + std::string(probeModeName(mode)) +
         "," + (result.task == TaskKind::Classification ? "classification" : "regression") + "," +
         std::to_string(result.bestEpoch) + "," + formatDouble(result.validMetric) + "," + formatDouble(result.testMetric) + "," +
         std::to_string(result.samples) + "\n";
}

}  // namespace topocl
