// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "radmot/core/radar_types.hpp"
#include "radmot/model/network.hpp"
#include "radmot/nn/weight_store.hpp"
#include "radmot/train/labels.hpp"
#include "radmot/train/losses.hpp"

namespace radmot::train {

struct TrainSchedule {
  int stage1_epochs = 16;
  double stage1_lr = 1e-3;
  int stage2_epochs = 8;
  double stage2_lr = 8e-4;
  double lr_decay_per_epoch = 0.97;

  void validate() const;
};

/// Everything one frame-pair objective needs besides the weights.
struct PairBatch {
  const core::RadarFrame* cur = nullptr;
  const core::RadarFrame* prev = nullptr;
  PointLabels labels;
  /// Detection point sets of the current frame (treated as constants).
  std::vector<std::vector<int>> clusters;
  /// Detached descriptors of the previous frame's detections.
  std::vector<assoc::Descriptor> track_descriptors;
  Matrix affinity_labels;  // clusters x track_descriptors
};

struct PairResult {
  LossParts parts;
  double total = 0.0;
  std::vector<assoc::Descriptor> descriptors;  // of `clusters`, for the next step
};

/// Stage 1 optimises L_seg alone; stage 2 the weighted sum of all three terms.
/// `gru` is advanced; gradients are accumulated into `grads` when non-null.
PairResult pair_objective(const model::Network& net, const nn::WeightStore& w,
                          const PairBatch& batch, motion::GruState& gru, const LossConfig& cfg,
                          int stage, nn::GradientStore* grads);

/// Teacher-forced detections: density clustering of the labelled moving
/// points on [position, label flow].
std::vector<std::vector<int>> teacher_clusters(const core::RadarFrame& frame,
                                               const PointLabels& labels,
                                               const detect::DetectConfig& cfg);

struct TrainLogRow {
  int stage = 0;
  int epoch = 0;
  long step = 0;
  LossParts parts;
  double total = 0.0;
  double lr = 0.0;
};

struct EpochSummary {
  int stage = 0;
  int epoch = 0;
  long steps = 0;
  LossParts mean;
  double mean_total = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  nn::WeightStore weights;
  std::vector<TrainLogRow> log;
  std::vector<EpochSummary> epochs;
};

struct TrainOptions {
  /// Called after every epoch, e.g. for progress output or checkpoints.
  std::function<void(const EpochSummary&, const nn::WeightStore&)> on_epoch;
  /// Called once stage 1 is complete.
  std::function<void(const nn::WeightStore&)> on_stage1_done;
};

/// Two-stage schedule over every consecutive frame pair of every sequence, in
/// order, one optimizer step per pair. Throws DivergenceError on a non-finite loss.
TrainResult train(const model::Network& net, nn::WeightStore initial,
                  const std::vector<core::Sequence>& sequences, const TrainSchedule& schedule,
                  const LossConfig& cfg, const TrainOptions& options = {});

/// stage,epoch,step,L_flow,L_seg,L_aff,L_total,lr
std::string log_to_csv(const std::vector<TrainLogRow>& rows);

}  // namespace radmot::train
