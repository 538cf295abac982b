// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "radmot/eval/evaluator.hpp"
#include "radmot/nn/weight_store.hpp"
#include "radmot/pipeline/config.hpp"
#include "radmot/pipeline/tracker.hpp"
#include "radmot/train/grad_check.hpp"
#include "radmot/train/trainer.hpp"

namespace radmot::pipeline {

namespace fs = std::filesystem;

/// Sequence directories under `data_dir` (those holding meta.json), sorted by
/// name. `data_dir` itself counts when it holds meta.json.
std::vector<fs::path> list_sequences(const fs::path& data_dir);

/// Per-sequence ground-truth objects: gt_objects.jsonl when present,
/// otherwise box membership of the annotations.
eval::SequenceObjects load_ground_truth(const fs::path& seq_dir);

struct SynthOptions {
  int jobs = 1;
};

/// Writes `sequences` synthetic sequences as seq_NNN/ directories, each with
/// gt_objects.jsonl and gt_points/NNNNNN.csv (flow_x,flow_y,flow_z,moving,object_id).
void run_synth(const PipelineConfig& cfg, const fs::path& out_dir, const SynthOptions& opt = {});

/// Tracks one in-memory sequence; returns the track output lines.
std::string track_sequence(const model::Network& net, const nn::WeightStore& weights,
                           const core::Sequence& seq, const TrackerOptions& options,
                           std::vector<TrackerFrame>* frames = nullptr);

TrackerOptions tracker_options(const PipelineConfig& cfg);

struct TrackOptions {
  int jobs = 1;
  bool write_timing = false;
  bool dump_flow = false;
};

struct TrackSummary {
  std::size_t sequences = 0;
  std::size_t frames = 0;
  std::size_t detections = 0;
  std::size_t tracks_created = 0;
};

/// Weights are loaded from `weights_file` when given; otherwise the network
/// starts from zeros (logged as a warning; cheat mode needs none). Writes
/// <out>/<sequence>/tracks.jsonl and <out>/summary.json.
TrackSummary run_track(const PipelineConfig& cfg, const std::optional<fs::path>& weights_file,
                       const fs::path& data_dir, const fs::path& out_dir,
                       const TrackOptions& opt = {});

/// Loads every sequence of `data_dir` with its matching tracks.jsonl.
std::vector<eval::EvalSequence> load_eval_set(const fs::path& data_dir, const fs::path& tracks_dir,
                                              int jobs = 1);

/// Writes metrics.json, sweep.csv (per-recall rows) and recall_sweep.svg.
eval::MetricReport run_eval(const PipelineConfig& cfg, const fs::path& data_dir,
                            const fs::path& tracks_dir, const fs::path& out_dir, int jobs = 1);

/// Writes sweep_<axis>.csv and sweep_<axis>.svg.
std::vector<eval::SweepRow> run_sweep(const PipelineConfig& cfg, const fs::path& data_dir,
                                      const fs::path& tracks_dir, const fs::path& out_dir,
                                      eval::SweepAxis axis, const std::vector<double>& values,
                                      int jobs = 1);

struct TrainRunOptions {
  /// Stage-1 checkpoint to resume from; stage 1 is skipped.
  std::optional<fs::path> resume_stage1;
};

/// Writes stage1.rmw, final.rmw and train_log.csv into `out_dir`.
train::TrainResult run_train(const PipelineConfig& cfg, const fs::path& data_dir,
                             const fs::path& out_dir, const TrainRunOptions& opt = {});

/// Full composite gradient check on the 16-point toy pair.
train::GradCheckReport run_grad_check(const PipelineConfig& cfg, std::size_t entries_per_tensor = 6);

void write_text(const fs::path& file, const std::string& text);

}  // namespace radmot::pipeline
