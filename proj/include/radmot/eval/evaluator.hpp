// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace radmot::eval {

struct EvalConfig {
  double iou_threshold = 0.25;
  int min_points_valid = 5;
  int recall_steps = 40;
  bool confidence_sweep = true;

  void validate() const;
};

/// One object (ground truth or prediction) in one frame.
struct ObjectInstance {
  int id = 0;
  std::vector<int> points;  // frame-local point indices
  double confidence = 1.0;
};

struct FrameObjects {
  std::int64_t frame_index = 0;
  std::vector<ObjectInstance> objects;
};

/// Frames sorted by index.
struct SequenceObjects {
  std::vector<FrameObjects> frames;
};

struct EvalSequence {
  std::string name;
  SequenceObjects gt;
  SequenceObjects pred;
};

/// Groups points by object id; negative ids (static clutter) are skipped.
FrameObjects objects_from_labels(std::int64_t frame_index, const std::vector<int>& object_id);

/// |a ∩ b| / |a ∪ b| over index sets; 0 when both are empty.
double point_iou(const std::vector<int>& a, const std::vector<int>& b);

struct FrameResult {
  int tp = 0;
  int fp = 0;
  int fn = 0;
  int id_switches = 0;
  double matched_iou_sum = 0.0;
  int gt_count = 0;                          // valid GT objects
  std::vector<std::pair<int, int>> matches;  // (gt id, pred id)
};

/// Previous predicted id matched to each GT id, carried across frames.
using IdMemory = std::map<int, int>;

/// Drops objects with fewer than min_points_valid points on both sides, then
/// greedily matches by descending IoU (ties: lower GT id, then lower pred id),
/// accepting IoU >= iou_threshold. Throws ValidationError on duplicate ids.
FrameResult match_frame(const FrameObjects& gt, const FrameObjects& pred, const EvalConfig& cfg,
                        IdMemory* memory = nullptr);

struct ClearMetrics {
  long gt = 0, tp = 0, fp = 0, fn = 0, id_switches = 0;
  double matched_iou_sum = 0.0;
  int trajectories = 0, mostly_tracked = 0, mostly_lost = 0;
  // Undefined (nullopt) when there is no valid ground truth.
  std::optional<double> mota, moda, mt, ml, motp;
};

/// Totals from frame accumulators: MOTA = 1 - (FP + FN + IDSW) / GT,
/// MODA = 1 - (FP + FN) / GT.
ClearMetrics clear_from_counts(long gt, long fp, long fn, long id_switches);

/// Evaluates every sequence at one confidence threshold (predictions with
/// confidence >= threshold are kept). MT / ML use each GT trajectory's valid frames.
ClearMetrics evaluate_clear(const std::vector<EvalSequence>& seqs, const EvalConfig& cfg,
                            double confidence_threshold = -1.0);

struct RecallRow {
  double target_recall = 0.0;
  bool reached = false;
  double threshold = 0.0;
  double achieved_recall = 0.0;
  double mota = 0.0;   // plain MOTA at the threshold
  double smota = 0.0;  // clamp(1 - (FP + FN + IDSW - (1 - r) GT) / (r GT), 0, 1)
  double motp = 0.0;   // mean IoU of matches
};

struct AmotaResult {
  double samota = 0.0;
  double amota = 0.0;
  double amotp = 0.0;
  std::vector<RecallRow> table;
};

/// Averages over recall targets r_j = j / recall_steps (j = 1..steps). For
/// each target the highest confidence threshold whose recall reaches it is
/// used; unreachable targets contribute 0.
AmotaResult amota_family(const std::vector<EvalSequence>& seqs, const EvalConfig& cfg);

struct MetricReport {
  ClearMetrics clear;          // at the best-MOTA threshold
  double best_threshold = -1.0;
  ClearMetrics unfiltered;     // every prediction kept
  AmotaResult amota;
};

MetricReport evaluate(const std::vector<EvalSequence>& seqs, const EvalConfig& cfg);

enum class SweepAxis { kMinPointsValid, kIouThreshold };

struct SweepRow {
  double value = 0.0;
  MetricReport report;
};

std::vector<SweepRow> sweep(const std::vector<EvalSequence>& seqs, const EvalConfig& base,
                            SweepAxis axis, const std::vector<double>& values);

nlohmann::json report_to_json(const MetricReport& r);
std::string sweep_to_csv(SweepAxis axis, const std::vector<SweepRow>& rows);
std::string axis_name(SweepAxis axis);

/// `{"frame_index","object_id","point_indices"}` lines.
SequenceObjects load_gt_jsonl(const std::filesystem::path& file);
/// Track-output lines (`frame_index`, `track_id`, `confidence`, `point_indices`).
SequenceObjects load_tracks_jsonl(const std::filesystem::path& file);
SequenceObjects parse_tracks_jsonl(const std::string& text);
std::string gt_to_jsonl(const SequenceObjects& gt);

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Standalone SVG line chart.
std::string svg_line_plot(const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<PlotSeries>& series);

}  // namespace radmot::eval
