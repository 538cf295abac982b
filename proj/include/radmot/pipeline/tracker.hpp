// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "radmot/assoc/associator.hpp"
#include "radmot/core/radar_types.hpp"
#include "radmot/model/network.hpp"
#include "radmot/pipeline/config.hpp"

namespace radmot::pipeline {

struct FrameTiming {
  std::int64_t frame_index = 0;
  double network_ms = 0.0;
  double detection_ms = 0.0;
  double association_ms = 0.0;
  double total_ms = 0.0;
};

struct TrackerFrame {
  std::int64_t frame_index = 0;
  std::size_t detections = 0;
  std::string records;   // track output lines for this frame
  Matrix flow;           // per-point flow used for detection
  FrameTiming timing;
};

struct TrackerOptions {
  DetectorKind detector = DetectorKind::kLearned;
  /// Replaces the network's mask and flow with box-derived labels, zeroes the
  /// embedding and scores association with geometric affinity weights.
  bool cheat_mode = false;
  double motion_label_threshold = 0.05;
};

/// Online tracker over one sequence. Frames must arrive in increasing index
/// order. The first frame only initialises state (no detections) unless cheat
/// mode supplies labels for it.
class Tracker {
 public:
  Tracker(const model::Network& net, const nn::WeightStore& weights, TrackerOptions options);

  TrackerFrame step(const core::SequenceFrame& frame);
  const assoc::TrackSet& tracks() const { return tracks_; }
  std::size_t tracks_created() const { return static_cast<std::size_t>(tracks_.next_id); }

 private:
  detect::DetectionSet detect(const core::SequenceFrame& sf, const Matrix& flow,
                              const Matrix& embedding, const detect::MotionMask& mask) const;

  const model::Network& net_;
  const nn::WeightStore& weights_;
  nn::WeightStore prior_;
  TrackerOptions opt_;
  std::optional<core::SequenceFrame> prev_;
  motion::GruState gru_;
  assoc::TrackSet tracks_;
};

}  // namespace radmot::pipeline
