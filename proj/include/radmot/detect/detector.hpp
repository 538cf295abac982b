// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "radmot/backbone/cost_volume.hpp"
#include "radmot/common/matrix.hpp"
#include "radmot/core/radar_types.hpp"
#include "radmot/motion/motion_flow.hpp"
#include "radmot/nn/layers.hpp"

namespace radmot::detect {

struct MotionScores {
  std::vector<double> scores;  // c_i in [0, 1]
};

struct MotionMask {
  std::vector<std::uint8_t> mask;

  std::size_t count() const;
};

/// One detected moving object: a subset of the frame's points with their flow
/// and embedding rows.
struct Cluster {
  std::vector<int> point_indices;  // ascending
  Matrix flow_rows;                // |cluster| x 3
  Matrix embedding_rows;           // |cluster| x F_e
};

struct DetectionSet {
  std::vector<Cluster> clusters;
};

struct DetectConfig {
  double zeta_mov = 0.5;
  double dbscan_eps = 1.5;
  int dbscan_min_points = 2;
  // Block weights of the clustering space. The embedding block is further
  // divided by sqrt(embedding_channels).
  double position_scale = 1.0;
  double flow_scale = 1.0;
  double embedding_scale = 0.1;
  int embedding_channels = 16;
  int classifier_hidden = 64;

  void validate() const;
};

/// Per-point motion classifier `motion_cls`: F_h -> hidden -> 1, logistic output.
class MotionClassifier {
 public:
  MotionClassifier() = default;
  MotionClassifier(std::size_t in_dim, std::size_t hidden);

  std::vector<nn::TensorSpec> specs() const { return mlp_.specs(); }
  /// N x 1 logits.
  Matrix logits(const Matrix& h, const nn::WeightStore& w, nn::Mlp::Cache* cache = nullptr) const;
  /// Returns dL/dH given dL/dlogit.
  Matrix backward(const nn::Mlp::Cache& cache, const Matrix& d_logits, const nn::WeightStore& w,
                  nn::GradientStore& g) const;

 private:
  nn::Mlp mlp_;
};

MotionScores classify_motion(const backbone::CostVolume& h, const nn::WeightStore& weights,
                             int hidden = 64);

/// m_i = 1 iff c_i > zeta (strict).
MotionMask threshold_mask(const MotionScores& scores, double zeta_mov);

/// Density clustering of the rows of `features` restricted to `candidates`.
/// A point is a core point when at least `min_points` candidates (itself
/// included) lie within `eps`. Clusters grow from core points in ascending
/// index order; a border point joins the first cluster that reaches it.
/// Returns index sets sorted ascending, in order of their lowest core point.
std::vector<std::vector<int>> dbscan(const Matrix& features, const std::vector<int>& candidates,
                                     double eps, int min_points);

/// Rows [position * s_p, flow * s_f, embedding[:channels] * s_e / sqrt(channels)].
Matrix clustering_features(const core::RadarFrame& frame, const Matrix& flow,
                           const Matrix& embedding, const DetectConfig& cfg);

DetectionSet cluster_moving(const core::RadarFrame& frame, const MotionMask& mask,
                            const motion::SceneFlow& flow, const motion::FlowEmbedding& emb,
                            const DetectConfig& cfg);

/// Wraps externally supplied point index sets (e.g. from box detections) as
/// clusters. Sets smaller than `min_points` are dropped.
DetectionSet external_detections(const std::vector<std::vector<int>>& index_sets,
                                 const motion::SceneFlow& flow, const motion::FlowEmbedding& emb,
                                 int min_points = 1);

Cluster make_cluster(std::vector<int> indices, const Matrix& flow, const Matrix& embedding);

}  // namespace radmot::detect
