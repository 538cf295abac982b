// SPDX-License-Identifier: Apache-2.0

#include "radmot/pipeline/tracker.hpp"

#include <chrono>
#include <map>

#include "radmot/common/errors.hpp"
#include "radmot/train/labels.hpp"

namespace radmot::pipeline {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::vector<std::vector<int>> box_point_sets(const core::RadarFrame& frame,
                                             const std::vector<core::BoxAnnotation>& boxes) {
  const auto ids = train::box_membership(frame, boxes);
  std::map<int, std::vector<int>> groups;
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] >= 0) groups[ids[i]].push_back(static_cast<int>(i));
  std::vector<std::vector<int>> out;
  for (auto& [id, pts] : groups) out.push_back(std::move(pts));
  return out;
}

}  // namespace

Tracker::Tracker(const model::Network& net, const nn::WeightStore& weights, TrackerOptions options)
    : net_(net), weights_(weights), opt_(options) {
  if (opt_.cheat_mode) prior_ = assoc::geometric_affinity_prior(net_.config().assoc);
}

detect::DetectionSet Tracker::detect(const core::SequenceFrame& sf, const Matrix& flow,
                                     const Matrix& embedding,
                                     const detect::MotionMask& mask) const {
  const motion::SceneFlow s{flow};
  const motion::FlowEmbedding e{embedding};
  if (opt_.detector == DetectorKind::kExternal)
    return detect::external_detections(box_point_sets(sf.frame, sf.boxes), s, e,
                                       net_.config().detect.dbscan_min_points);
  return detect::cluster_moving(sf.frame, mask, s, e, net_.config().detect);
}

TrackerFrame Tracker::step(const core::SequenceFrame& sf) {
  const auto t0 = Clock::now();
  const auto& frame = sf.frame;
  if (prev_ && frame.frame_index <= prev_->frame.frame_index)
    throw ValidationError("tracker: frame " + std::to_string(frame.frame_index) +
                          " is not after frame " + std::to_string(prev_->frame.frame_index));
  const auto& mcfg = net_.config();
  const std::size_t n = frame.size();

  TrackerFrame out;
  out.frame_index = frame.frame_index;
  out.flow = Matrix(n, 3);
  Matrix embedding(n, net_.embedding_width());
  detect::MotionMask mask;
  mask.mask.assign(n, 0);
  bool run_detection = prev_.has_value();

  if (opt_.cheat_mode) {
    if (prev_) {
      const auto l = train::label_points(frame, prev_->frame, sf.boxes, prev_->boxes,
                                         opt_.motion_label_threshold);
      out.flow = l.flow;
      mask.mask = l.motion_mask;
    } else {
      // No motion reference yet: every annotated point counts as moving.
      const auto ids = train::box_membership(frame, sf.boxes);
      for (std::size_t i = 0; i < n; ++i) mask.mask[i] = ids[i] >= 0 ? 1 : 0;
    }
    run_detection = true;
  } else if (prev_) {
    const auto r = net_.forward_pair(frame, prev_->frame, gru_, weights_);
    mask = detect::threshold_mask(r.scores, mcfg.detect.zeta_mov);
    out.flow = r.flow.vectors;
    embedding = r.embedding.per_point;
  }
  out.timing.network_ms = ms_since(t0);

  const auto t1 = Clock::now();
  detect::DetectionSet dets;
  if (run_detection) dets = detect(sf, out.flow, embedding, mask);
  out.detections = dets.clusters.size();
  std::vector<assoc::DetectionSummary> summaries;
  for (const auto& c : dets.clusters)
    summaries.push_back(assoc::summarize(c, frame, mcfg.assoc.descriptor_embedding));
  out.timing.detection_ms = ms_since(t1);

  const auto t2 = Clock::now();
  std::vector<assoc::Match> matches;
  if (!summaries.empty() && !tracks_.tracks.empty()) {
    if (mcfg.assoc.matcher == assoc::Matcher::kLearned) {
      std::vector<assoc::Descriptor> det_desc, trk_desc;
      for (const auto& s : summaries) det_desc.push_back(s.descriptor);
      for (const auto& t : tracks_.tracks) trk_desc.push_back(t.descriptor);
      const Matrix p = net_.associate(det_desc, trk_desc, opt_.cheat_mode ? prior_ : weights_);
      matches = assoc::extract_matches(p, mcfg.assoc.match_threshold);
    } else {
      matches = assoc::baseline_match(tracks_, summaries, frame, mcfg.assoc.matcher,
                                      mcfg.assoc.baseline_max_distance);
    }
  }
  tracks_ = assoc::update_tracks(tracks_, summaries, matches, frame, mcfg.assoc);
  out.records = assoc::track_records_jsonl(tracks_, frame.frame_index);
  out.timing.association_ms = ms_since(t2);

  prev_ = sf;
  out.timing.frame_index = frame.frame_index;
  out.timing.total_ms = ms_since(t0);
  return out;
}

}  // namespace radmot::pipeline
