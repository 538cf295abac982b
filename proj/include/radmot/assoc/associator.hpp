// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "radmot/common/matrix.hpp"
#include "radmot/core/radar_types.hpp"
#include "radmot/detect/detector.hpp"
#include "radmot/nn/layers.hpp"

namespace radmot::assoc {

enum class Matcher { kLearned, kGreedy, kHungarian };

struct AssocConfig {
  std::vector<std::size_t> affinity_hidden{64, 64};
  int sinkhorn_iterations = 30;
  double temperature = 1.0;
  double match_threshold = 0.5;
  double new_track_confidence = 0.5;
  /// Frames an unmatched track survives. 0 removes it immediately.
  int max_missed_frames = 0;
  /// Embedding channels entering the descriptor (F_e').
  std::size_t descriptor_embedding = 64;
  Matcher matcher = Matcher::kLearned;
  /// Gate of the centroid-distance baselines, meters.
  double baseline_max_distance = 3.0;

  void validate() const;
  /// mean (3) + variance (3) + max-pooled [flow (3), embedding (F_e')]
  std::size_t descriptor_width() const { return 9 + descriptor_embedding; }
};

using Descriptor = std::vector<double>;

/// concat(mean(position), population var(position), max over rows of
/// [flow, embedding[:F_e']]). `argmax` receives, per pooled channel, the frame
/// point index that won (first on ties).
Descriptor aggregate_descriptor(const detect::Cluster& cluster, const core::RadarFrame& frame,
                                std::size_t embedding_channels,
                                std::vector<int>* argmax = nullptr);

/// Routes dL/d(descriptor) into per-point flow and embedding gradients.
void descriptor_backward(const std::vector<int>& argmax, const double* d_descriptor,
                         Matrix& d_flow, Matrix& d_embedding);

/// Affinity network `affinity`: a_{k,m} = MLP(l_k - l_m) -> one logit.
class AffinityNet {
 public:
  struct Cache {
    nn::Mlp::Cache mlp;
    std::size_t k = 0, m = 0;
  };

  AffinityNet() = default;
  AffinityNet(std::size_t descriptor_width, std::vector<std::size_t> hidden);

  std::vector<nn::TensorSpec> specs() const { return mlp_.specs(); }
  std::size_t width() const { return width_; }

  /// K x M logits. Either list may be empty.
  Matrix raw(const std::vector<Descriptor>& detections, const std::vector<Descriptor>& tracks,
             const nn::WeightStore& w, Cache* cache = nullptr) const;

  /// Returns dL/d(detection descriptors), K x width. Track descriptors are constants.
  Matrix backward(const Cache& cache, const Matrix& d_raw, const nn::WeightStore& w,
                  nn::GradientStore& g) const;

 private:
  std::size_t width_ = 0;
  nn::Mlp mlp_;
};

Matrix affinity(const std::vector<Descriptor>& detections, const std::vector<Descriptor>& tracks,
                const nn::WeightStore& weights, const AssocConfig& cfg);

/// Intermediate states of the normalisation, kept for back-propagation.
struct SinkhornTrace {
  bool transposed = false;
  bool square = false;
  double temperature = 1.0;
  Matrix start;                        // exp((raw - max) / temperature), working orientation
  std::vector<Matrix> after;           // state after each half step
  std::vector<std::vector<double>> divisors;
};

/// Alternating row / column normalisation of exp(raw / temperature).
///
/// Square inputs get the standard doubly stochastic iteration. For K != M the
/// shorter side is normalised to sum 1 and the longer side is divided by
/// max(sum, 1), so every row and column sums to at most 1. The maximum along
/// the shorter side is subtracted before exponentiation. Non-finite logits
/// throw ValidationError.
Matrix sinkhorn(const Matrix& raw, int iterations, double temperature,
                SinkhornTrace* trace = nullptr);

/// dL/d(raw) given dL/d(normalised).
Matrix sinkhorn_backward(const SinkhornTrace& trace, const Matrix& d_out);

struct Match {
  int detection = 0;
  int track = 0;
  double score = 0.0;

  bool operator==(const Match&) const = default;
};

/// Greedy one-to-one selection by descending score; equal scores prefer the
/// lower (detection, track) pair. Pairs below `threshold` are dropped.
std::vector<Match> extract_matches(const Matrix& normalized, double threshold);

struct Track {
  int id = 0;
  Descriptor descriptor;
  std::vector<int> point_indices;
  double confidence = 0.0;
  int age = 0;                      // frames since birth
  std::int64_t last_seen = 0;
  int missed = 0;
  core::Vec3 centroid = core::Vec3::Zero();        // sensor frame of last_seen
  core::Vec3 mean_flow = core::Vec3::Zero();
  core::Vec3 centroid_world = core::Vec3::Zero();
  core::Vec3 displacement_world = core::Vec3::Zero();  // last inter-frame centroid step
};

struct TrackSet {
  std::vector<Track> tracks;
  int next_id = 0;
};

/// Per-detection summary the lifecycle needs.
struct DetectionSummary {
  Descriptor descriptor;
  std::vector<int> point_indices;
  core::Vec3 centroid = core::Vec3::Zero();
  core::Vec3 mean_flow = core::Vec3::Zero();
};

DetectionSummary summarize(const detect::Cluster& cluster, const core::RadarFrame& frame,
                           std::size_t embedding_channels);

/// Matched detections inherit the track id and take the match score as
/// confidence; unmatched detections open new tracks; unmatched tracks are
/// dropped once they have missed more than `max_missed_frames` frames.
TrackSet update_tracks(const TrackSet& tracks, const std::vector<DetectionSummary>& detections,
                       const std::vector<Match>& matches, const core::RadarFrame& frame,
                       const AssocConfig& cfg);

/// Minimum-cost one-to-one assignment of a rectangular cost matrix; returns
/// (row, col) pairs covering min(rows, cols) entries.
std::vector<std::pair<int, int>> hungarian(const Matrix& cost);

/// Centroid-distance matching after advancing each track by its last
/// displacement (world frame). Pairs farther than the gate are rejected; the
/// score is 1 / (1 + distance).
std::vector<Match> baseline_match(const TrackSet& tracks,
                                  const std::vector<DetectionSummary>& detections,
                                  const core::RadarFrame& frame, Matcher method,
                                  double max_distance);

/// Affinity weights whose logit falls linearly (slope about -scale) with the
/// L1 distance between mean positions,
/// built from a leaky [I; -I] first layer. Used when no trained weights exist.
nn::WeightStore geometric_affinity_prior(const AssocConfig& cfg, double scale = 2.0);

/// One JSON line per live track seen in `frame_index`:
/// {"frame_index","track_id","confidence","point_indices","centroid","mean_flow"}.
std::string track_records_jsonl(const TrackSet& tracks, std::int64_t frame_index);

}  // namespace radmot::assoc
