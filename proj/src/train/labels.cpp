// SPDX-License-Identifier: Apache-2.0

#include "radmot/train/labels.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "radmot/core/ego_motion.hpp"
#include "radmot/eval/evaluator.hpp"

namespace radmot::train {

std::vector<int> box_membership(const core::RadarFrame& frame,
                                const std::vector<core::BoxAnnotation>& boxes) {
  std::vector<int> ids(frame.size(), -1);
  for (std::size_t i = 0; i < frame.size(); ++i) {
    for (const auto& b : boxes) {
      if (b.contains(frame.points[i].position)) {
        ids[i] = b.track_id;
        break;
      }
    }
  }
  return ids;
}

PointLabels label_points(const core::RadarFrame& frame_t, const core::RadarFrame& frame_prev,
                         const std::vector<core::BoxAnnotation>& boxes_t,
                         const std::vector<core::BoxAnnotation>& boxes_prev,
                         double motion_threshold) {
  std::map<int, const core::BoxAnnotation*> prev_by_id;
  for (const auto& b : boxes_prev) prev_by_id[b.track_id] = &b;

  PointLabels out;
  const std::size_t n = frame_t.size();
  out.flow = Matrix(n, 3);
  out.motion_mask.assign(n, 0);
  out.point_object_id = box_membership(frame_t, boxes_t);

  std::map<int, core::RigidTransform> box_motion;  // sensor_prev <- sensor_t for boxed points
  for (const auto& b : boxes_t) {
    auto it = prev_by_id.find(b.track_id);
    if (it != prev_by_id.end()) box_motion[b.track_id] = it->second->pose() * b.pose().inverse();
  }
  for (std::size_t i = 0; i < n; ++i) {
    const core::Vec3& p = frame_t.points[i].position;
    const core::Vec3 ego = core::ego_flow(frame_t.ego_pose, frame_prev.ego_pose, p);
    core::Vec3 flow = ego;
    const int id = out.point_object_id[i];
    if (id >= 0) {
      auto it = box_motion.find(id);
      if (it != box_motion.end()) flow = it->second.apply(p) - p;
    }
    for (int k = 0; k < 3; ++k) out.flow(i, k) = flow[k];
    out.motion_mask[i] = (flow - ego).norm() > motion_threshold ? 1 : 0;
  }
  return out;
}

std::vector<int> inherit_ids(const std::vector<std::vector<int>>& sets,
                             const std::vector<int>& point_object_id) {
  std::map<int, std::vector<int>> objects;
  for (std::size_t i = 0; i < point_object_id.size(); ++i)
    if (point_object_id[i] >= 0) objects[point_object_id[i]].push_back(static_cast<int>(i));

  std::vector<std::tuple<double, std::size_t, int>> pairs;  // (-iou, set, id)
  for (std::size_t s = 0; s < sets.size(); ++s) {
    for (const auto& [id, pts] : objects) {
      const double iou = eval::point_iou(sets[s], pts);
      if (iou > kLabelIouThreshold) pairs.emplace_back(-iou, s, id);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  std::vector<int> out(sets.size(), -1);
  std::map<int, bool> used;
  for (const auto& [neg, s, id] : pairs) {
    if (out[s] >= 0 || used[id]) continue;
    out[s] = id;
    used[id] = true;
  }
  return out;
}

Matrix label_affinity(const std::vector<std::vector<int>>& detections,
                      const std::vector<int>& object_id_t,
                      const std::vector<std::vector<int>>& tracks_prev,
                      const std::vector<int>& object_id_prev) {
  const auto det_ids = inherit_ids(detections, object_id_t);
  const auto trk_ids = inherit_ids(tracks_prev, object_id_prev);
  Matrix a(detections.size(), tracks_prev.size());
  for (std::size_t k = 0; k < det_ids.size(); ++k)
    for (std::size_t m = 0; m < trk_ids.size(); ++m)
      if (det_ids[k] >= 0 && det_ids[k] == trk_ids[m]) a(k, m) = 1.0;
  return a;
}

GroundTruthLabels generate_labels(const core::RadarFrame& frame_t,
                                  const core::RadarFrame& frame_prev,
                                  const std::vector<core::BoxAnnotation>& boxes_t,
                                  const std::vector<core::BoxAnnotation>& boxes_prev,
                                  const detect::DetectionSet& detections,
                                  const assoc::TrackSet& tracks_prev, double motion_threshold) {
  PointLabels pl = label_points(frame_t, frame_prev, boxes_t, boxes_prev, motion_threshold);
  std::vector<std::vector<int>> dets, trks;
  for (const auto& c : detections.clusters) dets.push_back(c.point_indices);
  for (const auto& t : tracks_prev.tracks)
    trks.push_back(t.last_seen == frame_prev.frame_index ? t.point_indices : std::vector<int>{});
  GroundTruthLabels out;
  out.affinity = label_affinity(dets, pl.point_object_id, trks,
                                box_membership(frame_prev, boxes_prev));
  out.flow = std::move(pl.flow);
  out.motion_mask = std::move(pl.motion_mask);
  out.point_object_id = std::move(pl.point_object_id);
  return out;
}

}  // namespace radmot::train
