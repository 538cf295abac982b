// SPDX-License-Identifier: Apache-2.0

#include "radmot/detect/detector.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "radmot/common/errors.hpp"
#include "radmot/kernels/kernels.hpp"

namespace radmot::detect {

std::size_t MotionMask::count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
}

void DetectConfig::validate() const {
  if (!(zeta_mov > 0.0 && zeta_mov < 1.0)) throw ValidationError("detect: zeta_mov must be in (0,1)");
  if (!(dbscan_eps > 0.0)) throw ValidationError("detect: dbscan_eps must be > 0");
  if (dbscan_min_points < 1) throw ValidationError("detect: dbscan_min_points must be >= 1");
  if (embedding_channels < 0) throw ValidationError("detect: embedding_channels must be >= 0");
  if (position_scale < 0.0 || flow_scale < 0.0 || embedding_scale < 0.0) {
    throw ValidationError("detect: feature scales must be >= 0");
  }
  if (classifier_hidden < 1) throw ValidationError("detect: classifier_hidden must be >= 1");
}

MotionClassifier::MotionClassifier(std::size_t in_dim, std::size_t hidden)
    : mlp_("motion_cls", {in_dim, hidden, 1}, false) {}

Matrix MotionClassifier::logits(const Matrix& h, const nn::WeightStore& w,
                                nn::Mlp::Cache* cache) const {
  return mlp_.forward(h, w, cache);
}

Matrix MotionClassifier::backward(const nn::Mlp::Cache& cache, const Matrix& d_logits,
                                  const nn::WeightStore& w, nn::GradientStore& g) const {
  return mlp_.backward(cache, d_logits, w, g, true);
}

MotionScores classify_motion(const backbone::CostVolume& h, const nn::WeightStore& weights,
                             int hidden) {
  const MotionClassifier cls(h.per_point.cols(), static_cast<std::size_t>(hidden));
  const Matrix z = cls.logits(h.per_point, weights);
  MotionScores s;
  s.scores.reserve(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) s.scores.push_back(nn::sigmoid(z(i, 0)));
  return s;
}

MotionMask threshold_mask(const MotionScores& scores, double zeta_mov) {
  MotionMask m;
  m.mask.reserve(scores.scores.size());
  for (double c : scores.scores) m.mask.push_back(c > zeta_mov ? 1 : 0);
  return m;
}

std::vector<std::vector<int>> dbscan(const Matrix& features, const std::vector<int>& candidates,
                                     double eps, int min_points) {
  const std::size_t n = candidates.size();
  const std::size_t d = features.cols();
  const double eps2 = eps * eps;
  std::vector<std::vector<int>> nbrs(n);
  for (std::size_t a = 0; a < n; ++a) {
    const double* fa = features.row(candidates[a]).data();
    for (std::size_t b = 0; b < n; ++b) {
      if (kernels::squared_distance(fa, features.row(candidates[b]).data(), d) <= eps2) {
        nbrs[a].push_back(static_cast<int>(b));
      }
    }
  }
  std::vector<int> label(n, -1);
  std::vector<std::vector<int>> clusters;
  std::deque<int> queue;
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (label[seed] >= 0 || static_cast<int>(nbrs[seed].size()) < min_points) continue;
    const int id = static_cast<int>(clusters.size());
    clusters.emplace_back();
    label[seed] = id;
    queue.assign(1, static_cast<int>(seed));
    while (!queue.empty()) {
      const int p = queue.front();
      queue.pop_front();
      clusters[id].push_back(candidates[p]);
      if (static_cast<int>(nbrs[p].size()) < min_points) continue;  // border point
      for (int q : nbrs[p]) {
        if (label[q] >= 0) continue;
        label[q] = id;
        queue.push_back(q);
      }
    }
    std::sort(clusters[id].begin(), clusters[id].end());
  }
  std::erase_if(clusters, [&](const auto& c) { return static_cast<int>(c.size()) < min_points; });
  return clusters;
}

Matrix clustering_features(const core::RadarFrame& frame, const Matrix& flow,
                           const Matrix& embedding, const DetectConfig& cfg) {
  const std::size_t n = frame.size();
  RADMOT_EXPECT(flow.rows() == n && flow.cols() == 3, "clustering: flow shape mismatch");
  RADMOT_EXPECT(embedding.rows() == n, "clustering: embedding row count mismatch");
  const std::size_t ec =
      std::min(embedding.cols(), static_cast<std::size_t>(cfg.embedding_channels));
  const double es = ec > 0 ? cfg.embedding_scale / std::sqrt(static_cast<double>(cfg.embedding_channels)) : 0.0;
  Matrix out(n, 6 + ec);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = out.row(i);
    for (int k = 0; k < 3; ++k) {
      r[k] = frame.points[i].position[k] * cfg.position_scale;
      r[3 + k] = flow(i, k) * cfg.flow_scale;
    }
    for (std::size_t k = 0; k < ec; ++k) r[6 + k] = embedding(i, k) * es;
  }
  return out;
}

Cluster make_cluster(std::vector<int> indices, const Matrix& flow, const Matrix& embedding) {
  Cluster c;
  c.point_indices = std::move(indices);
  c.flow_rows = Matrix(c.point_indices.size(), 3);
  c.embedding_rows = Matrix(c.point_indices.size(), embedding.cols());
  for (std::size_t r = 0; r < c.point_indices.size(); ++r) {
    const auto i = static_cast<std::size_t>(c.point_indices[r]);
    RADMOT_EXPECT(i < flow.rows() && i < embedding.rows(), "cluster: point index out of range");
    std::copy(flow.row(i).begin(), flow.row(i).end(), c.flow_rows.row(r).begin());
    std::copy(embedding.row(i).begin(), embedding.row(i).end(), c.embedding_rows.row(r).begin());
  }
  return c;
}

DetectionSet cluster_moving(const core::RadarFrame& frame, const MotionMask& mask,
                            const motion::SceneFlow& flow, const motion::FlowEmbedding& emb,
                            const DetectConfig& cfg) {
  RADMOT_EXPECT(mask.mask.size() == frame.size(), "cluster_moving: mask length mismatch");
  std::vector<int> moving;
  for (std::size_t i = 0; i < mask.mask.size(); ++i) {
    if (mask.mask[i]) moving.push_back(static_cast<int>(i));
  }
  DetectionSet out;
  if (moving.empty()) return out;
  const Matrix feats = clustering_features(frame, flow.vectors, emb.per_point, cfg);
  for (auto& idx : dbscan(feats, moving, cfg.dbscan_eps, cfg.dbscan_min_points)) {
    out.clusters.push_back(make_cluster(std::move(idx), flow.vectors, emb.per_point));
  }
  return out;
}

DetectionSet external_detections(const std::vector<std::vector<int>>& index_sets,
                                 const motion::SceneFlow& flow, const motion::FlowEmbedding& emb,
                                 int min_points) {
  DetectionSet out;
  for (auto idx : index_sets) {
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    if (static_cast<int>(idx.size()) < min_points) continue;
    out.clusters.push_back(make_cluster(std::move(idx), flow.vectors, emb.per_point));
  }
  return out;
}

}  // namespace radmot::detect
