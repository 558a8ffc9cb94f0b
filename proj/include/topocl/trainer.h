// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "topocl/dataset.h"
#include "topocl/encoder.h"
#include "topocl/losses.h"
#include "topocl/optim.h"
#include "topocl/parameters.h"
#include "topocl/vectorize.h"

namespace topocl {

struct TrainConfig {
  int           epochs       = 100;
  int           batchSize    = 256;
  double        learningRate = 1e-3;
  std::uint64_t seed         = 0;
  LossConfig    loss;
  //! Used to fingerprint augmented views in TDLViews mode; must match the corpus fingerprints.
  FingerprintSpec fingerprint;
  //! The two stochastic views of every graph in view-based modes.
  Augmentation viewI{Augmentation::Kind::NodeDrop, 0.2};
  Augmentation viewJ{Augmentation::Kind::EdgePerturb, 0.2};
  //! Output width of the contrastive projection head; 0 means the encoder width.
  int projectionDim = 0;

  //! Throws InvalidArgument: epochs >= 1, learningRate > 0, batchSize >= 2 for contrastive modes
  //! (>= 1 otherwise), projectionDim >= 0, valid loss config and augmentation ratios.
  void validate() const;
};

//! TDL, TDLViews, NTXent and Combined compare samples within a batch.
bool isContrastive(const LossConfig& loss);
//! View-based modes draw two augmentations per graph.
bool usesViews(const LossConfig& loss);

struct Profile {
  std::string   name;
  EncoderConfig encoder;
  TrainConfig   train;
};

//! 3 layers, 64 hidden, batch 64.
Profile deskProfile();
//! 5 layers, 300 hidden, batch 256, 100 epochs.
Profile paperProfile();
//! "desk" or "paper"; throws InvalidArgument otherwise.
Profile profileFromName(std::string_view name);

//! Encoder, then the contrastive head "head" (hidden -> hidden -> projection), then "tae_head"
//! (hidden -> hidden -> fingerprintWidth) when the loss needs it. Seeded by deriveSeed(seed, 0).
ParameterSet initPretrainParameters(const EncoderConfig& encoder, const TrainConfig& train, int fingerprintWidth);

//! Everything one optimization step reads.
struct PretrainBatch {
  std::vector<std::size_t> indices;
  std::vector<MolGraph>    graphs;
  Matrix                   fingerprints;
  std::vector<MolGraph>    viewI;
  std::vector<MolGraph>    viewJ;
  //! View fingerprints (TDLViews only).
  Matrix viewFingerprintsI;
  Matrix viewFingerprintsJ;
  //! Seed of the dropout streams of this step.
  std::uint64_t dropoutSeed = 0;
};

PretrainBatch makePretrainBatch(std::span<const MolGraph> corpus, const CorpusFingerprints& fingerprints,
                                std::span<const std::size_t> indices, int epoch, const TrainConfig& config);

//! Loss of one batch on the tape. Each encoder pass draws dropout from its own stream, so adding a
//! term never changes the randomness of the others.
ad::Var pretrainLoss(ad::Tape& tape, const BoundParameters& params, const PretrainBatch& batch, const EncoderConfig& encoder,
                     const TrainConfig& config);

struct EpochRecord {
  int    epoch = 0;
  double loss  = 0.0;
};

struct PretrainResult {
  ParameterSet             finalParameters;
  ParameterSet             bestParameters;
  int                      bestEpoch = 0;
  std::vector<EpochRecord> curve;
};

struct PretrainOptions {
  //! When set: loss_curve.csv, checkpoint_best.ckpt (rewritten on every improvement),
  //! checkpoint_final.ckpt and, on failure, nonfinite_batch.json.
  std::filesystem::path                   outDir;
  std::function<void(const EpochRecord&)> onEpoch;
};

//! Each epoch shuffles with deriveSeed(deriveSeed(seed, 1), epoch), splits into batches of
//! batchSize (a trailing single graph joins the previous batch in contrastive modes), and takes one
//! Adam step per batch. The epoch loss is the size-weighted mean of batch losses; the best epoch has
//! the lowest loss, ties going to the earlier one. Throws NonFiniteLoss.
PretrainResult pretrain(std::span<const MolGraph> corpus, const CorpusFingerprints& fingerprints, const EncoderConfig& encoder,
                        const TrainConfig& config, const PretrainOptions& options = {});

std::string lossCurveToCsv(const std::vector<EpochRecord>& curve);

//! Checkpoint meta: {"kind", "encoder", "epoch", "loss"} with the loss as in toJson(LossConfig).
Checkpoint makeCheckpoint(const ParameterSet& params, const EncoderConfig& encoder, const std::string& kind, int epoch,
                          const LossConfig& loss);
//! Encoder config stored in a checkpoint's meta; throws SchemaError when absent.
EncoderConfig checkpointEncoder(const Checkpoint& checkpoint);

//! Mean-readout graph embeddings of the backbone (no head, no dropout), in chunks of batchSize.
Matrix embedGraphs(const ParameterSet& params, const EncoderConfig& encoder, std::span<const MolGraph> graphs, int batchSize = 256);

enum class ProbeMode { Linear, Mlp, Full };
enum class TaskKind { Classification, Regression };

std::string_view probeModeName(ProbeMode mode);
//! "linear", "mlp", "full".
ProbeMode        probeModeFromName(std::string_view name);

struct ProbeConfig {
  ProbeMode      mode         = ProbeMode::Linear;
  int            task         = 0;
  SplitFractions split;
  int            epochs       = 100;
  int            batchSize    = 32;
  double         learningRate = 1e-3;
  std::uint64_t  seed         = 0;

  void validate() const;
};

struct ProbeEpoch {
  int    epoch       = 0;
  double trainLoss   = 0.0;
  double validMetric = 0.0;
};

struct ProbeResult {
  TaskKind                task = TaskKind::Classification;
  //! "roc_auc" (higher is better) or "rmse" (lower is better).
  std::string             metric;
  int                     bestEpoch   = 0;
  double                  validMetric = 0.0;
  double                  testMetric  = 0.0;
  std::vector<ProbeEpoch> curve;
  //! Backbone plus "probe.*" head at the best validation epoch.
  ParameterSet            parameters;
  std::size_t             samples = 0;
};

//! Records with the task label present are split by randomStratifiedSplit. Binary labels give a
//! classification task with a logistic loss; anything else is regression with squared error. Frozen
//! modes embed every graph once and train only the head; Full trains every parameter. The test
//! metric is taken at the best validation epoch (ties to the earlier epoch).
ProbeResult finetuneOrProbe(const ParameterSet& pretrained, const EncoderConfig& encoder, const Dataset& dataset,
                            const ProbeConfig& config);

//! CSV with header `epoch,train_loss,valid_<metric>`.
std::string probeCurveToCsv(const ProbeResult& result);
//! CSV with header `mode,task,best_epoch,valid_<metric>,test_<metric>,samples` and one row.
std::string probeMetricsToCsv(const ProbeResult& result, ProbeMode mode);

}  // namespace topocl
