// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "radmot/assoc/associator.hpp"
#include "radmot/common/matrix.hpp"
#include "radmot/core/radar_types.hpp"
#include "radmot/detect/detector.hpp"

namespace radmot::train {

/// Per-point pseudo labels of one frame.
struct PointLabels {
  Matrix flow;                         // N x 3 backward flow
  std::vector<std::uint8_t> motion_mask;
  std::vector<int> point_object_id;    // -1 for background
};

struct GroundTruthLabels {
  Matrix flow;
  std::vector<std::uint8_t> motion_mask;
  Matrix affinity;                     // K x M, at most one 1 per row and column
  std::vector<int> point_object_id;
};

/// IoU above which a detection or track inherits a ground-truth id.
inline constexpr double kLabelIouThreshold = 0.25;

/// Points inside a box whose track_id also exists in `boxes_prev` follow the
/// box's rigid motion; every other point gets the flow of a static world
/// point. mask = 1 iff the ego-compensated flow is longer than `motion_threshold`.
PointLabels label_points(const core::RadarFrame& frame_t, const core::RadarFrame& frame_prev,
                         const std::vector<core::BoxAnnotation>& boxes_t,
                         const std::vector<core::BoxAnnotation>& boxes_prev,
                         double motion_threshold);

/// Object id of every point of `frame` (first containing box), -1 outside boxes.
std::vector<int> box_membership(const core::RadarFrame& frame,
                                const std::vector<core::BoxAnnotation>& boxes);

/// One-to-one greedy assignment of point sets to object ids by descending
/// point IoU, keeping pairs above kLabelIouThreshold. -1 marks no id.
std::vector<int> inherit_ids(const std::vector<std::vector<int>>& sets,
                             const std::vector<int>& point_object_id);

/// a(k, m) = 1 when detection k and track m inherit the same id. Only tracks
/// last seen in the previous frame can inherit one.
Matrix label_affinity(const std::vector<std::vector<int>>& detections,
                      const std::vector<int>& object_id_t,
                      const std::vector<std::vector<int>>& tracks_prev,
                      const std::vector<int>& object_id_prev);

GroundTruthLabels generate_labels(const core::RadarFrame& frame_t,
                                  const core::RadarFrame& frame_prev,
                                  const std::vector<core::BoxAnnotation>& boxes_t,
                                  const std::vector<core::BoxAnnotation>& boxes_prev,
                                  const detect::DetectionSet& detections,
                                  const assoc::TrackSet& tracks_prev, double motion_threshold);

}  // namespace radmot::train
