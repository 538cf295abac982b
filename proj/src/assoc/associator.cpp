// SPDX-License-Identifier: Apache-2.0

#include "radmot/assoc/associator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <unordered_set>

#include "radmot/common/errors.hpp"
#include "radmot/kernels/kernels.hpp"

namespace radmot::assoc {

void AssocConfig::validate() const {
  if (sinkhorn_iterations < 1) throw ValidationError("assoc: sinkhorn_iterations must be >= 1");
  if (!(temperature > 0.0)) throw ValidationError("assoc: temperature must be > 0");
  if (!(match_threshold >= 0.0 && match_threshold <= 1.0)) {
    throw ValidationError("assoc: match_threshold must be in [0,1]");
  }
  if (!(new_track_confidence >= 0.0 && new_track_confidence <= 1.0)) {
    throw ValidationError("assoc: new_track_confidence must be in [0,1]");
  }
  if (max_missed_frames < 0) throw ValidationError("assoc: max_missed_frames must be >= 0");
  if (!(baseline_max_distance > 0.0)) throw ValidationError("assoc: baseline_max_distance must be > 0");
  for (auto h : affinity_hidden) {
    if (h == 0) throw ValidationError("assoc: affinity widths must be > 0");
  }
}

Descriptor aggregate_descriptor(const detect::Cluster& cluster, const core::RadarFrame& frame,
                                std::size_t embedding_channels, std::vector<int>* argmax) {
  const std::size_t n = cluster.point_indices.size();
  RADMOT_EXPECT(n > 0, "descriptor: empty cluster");
  RADMOT_EXPECT(cluster.embedding_rows.cols() >= embedding_channels,
                 "descriptor: cluster embedding narrower than the descriptor block");
  Descriptor d(9 + embedding_channels, 0.0);
  for (int idx : cluster.point_indices) {
    for (int k = 0; k < 3; ++k) d[k] += frame.points.at(idx).position[k];
  }
  for (int k = 0; k < 3; ++k) d[k] /= static_cast<double>(n);
  for (int idx : cluster.point_indices) {
    for (int k = 0; k < 3; ++k) {
      const double r = frame.points[idx].position[k] - d[k];
      d[3 + k] += r * r;
    }
  }
  for (int k = 0; k < 3; ++k) d[3 + k] /= static_cast<double>(n);

  const std::size_t pooled = 3 + embedding_channels;
  std::vector<double> row(pooled);
  std::vector<std::int32_t> arg(pooled, cluster.point_indices[0]);
  std::fill(d.begin() + 6, d.end(), -std::numeric_limits<double>::infinity());
  for (std::size_t r = 0; r < n; ++r) {
    std::copy(cluster.flow_rows.row(r).begin(), cluster.flow_rows.row(r).end(), row.begin());
    std::copy_n(cluster.embedding_rows.row(r).begin(), embedding_channels, row.begin() + 3);
    kernels::max_update(row.data(), d.data() + 6, arg.data(), cluster.point_indices[r], pooled);
  }
  if (argmax) argmax->assign(arg.begin(), arg.end());
  return d;
}

void descriptor_backward(const std::vector<int>& argmax, const double* d_descriptor,
                         Matrix& d_flow, Matrix& d_embedding) {
  for (std::size_t c = 0; c < argmax.size(); ++c) {
    const double g = d_descriptor[6 + c];
    if (c < 3) {
      d_flow(argmax[c], c) += g;
    } else {
      d_embedding(argmax[c], c - 3) += g;
    }
  }
}

AffinityNet::AffinityNet(std::size_t descriptor_width, std::vector<std::size_t> hidden)
    : width_(descriptor_width) {
  std::vector<std::size_t> dims{descriptor_width};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(1);
  mlp_ = nn::Mlp("affinity", dims, false);
}

Matrix AffinityNet::raw(const std::vector<Descriptor>& detections,
                        const std::vector<Descriptor>& tracks, const nn::WeightStore& w,
                        Cache* cache) const {
  const std::size_t k = detections.size();
  const std::size_t m = tracks.size();
  Matrix diff(k * m, width_);
  for (std::size_t a = 0; a < k; ++a) {
    RADMOT_EXPECT(detections[a].size() == width_, "affinity: detection descriptor width mismatch");
    for (std::size_t b = 0; b < m; ++b) {
      RADMOT_EXPECT(tracks[b].size() == width_, "affinity: track descriptor width mismatch");
      auto row = diff.row(a * m + b);
      for (std::size_t c = 0; c < width_; ++c) row[c] = detections[a][c] - tracks[b][c];
    }
  }
  if (cache) {
    cache->k = k;
    cache->m = m;
  }
  Matrix out(k, m);
  if (k == 0 || m == 0) return out;
  const Matrix logits = mlp_.forward(diff, w, cache ? &cache->mlp : nullptr);
  out.storage() = logits.storage();
  return out;
}

Matrix AffinityNet::backward(const Cache& cache, const Matrix& d_raw, const nn::WeightStore& w,
                             nn::GradientStore& g) const {
  Matrix d_det(cache.k, width_);
  if (cache.k == 0 || cache.m == 0) return d_det;
  Matrix dy(cache.k * cache.m, 1);
  dy.storage() = d_raw.storage();
  const Matrix d_diff = mlp_.backward(cache.mlp, dy, w, g, true);
  for (std::size_t a = 0; a < cache.k; ++a) {
    for (std::size_t b = 0; b < cache.m; ++b) {
      kernels::axpy(1.0, d_diff.row(a * cache.m + b).data(), d_det.row(a).data(), width_);
    }
  }
  return d_det;
}

Matrix affinity(const std::vector<Descriptor>& detections, const std::vector<Descriptor>& tracks,
                const nn::WeightStore& weights, const AssocConfig& cfg) {
  return AffinityNet(cfg.descriptor_width(), cfg.affinity_hidden).raw(detections, tracks, weights);
}

namespace {

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  }
  return t;
}

// Divides each row (or column) by its sum, or by max(sum, 1) when clipped.
std::vector<double> normalise(Matrix& x, bool rows, bool clipped) {
  const std::size_t outer = rows ? x.rows() : x.cols();
  const std::size_t inner = rows ? x.cols() : x.rows();
  std::vector<double> div(outer);
  for (std::size_t a = 0; a < outer; ++a) {
    double s = 0.0;
    for (std::size_t b = 0; b < inner; ++b) s += rows ? x(a, b) : x(b, a);
    div[a] = clipped ? std::max(s, 1.0) : s;
    const double inv = 1.0 / div[a];
    for (std::size_t b = 0; b < inner; ++b) (rows ? x(a, b) : x(b, a)) *= inv;
  }
  return div;
}

void normalise_backward(const Matrix& y, const std::vector<double>& div, bool rows, bool clipped,
                        Matrix& grad) {
  const std::size_t outer = rows ? y.rows() : y.cols();
  const std::size_t inner = rows ? y.cols() : y.rows();
  for (std::size_t a = 0; a < outer; ++a) {
    if (clipped && div[a] == 1.0) continue;  // identity branch
    double dot = 0.0;
    for (std::size_t b = 0; b < inner; ++b) {
      dot += rows ? grad(a, b) * y(a, b) : grad(b, a) * y(b, a);
    }
    const double inv = 1.0 / div[a];
    for (std::size_t b = 0; b < inner; ++b) {
      double& g = rows ? grad(a, b) : grad(b, a);
      g = (g - dot) * inv;
    }
  }
}

}  // namespace

Matrix sinkhorn(const Matrix& raw, int iterations, double temperature, SinkhornTrace* trace) {
  for (double v : raw.storage()) {
    if (!std::isfinite(v)) throw ValidationError("sinkhorn: non-finite logit");
  }
  RADMOT_EXPECT(temperature > 0.0, "sinkhorn: temperature must be > 0");
  if (raw.rows() == 0 || raw.cols() == 0) return Matrix(raw.rows(), raw.cols());

  const bool transposed = raw.rows() > raw.cols();
  Matrix x = transposed ? transpose(raw) : raw;
  const bool square = x.rows() == x.cols();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    const double mx = *std::max_element(r.begin(), r.end());
    for (double& v : r) v = std::exp((v - mx) / temperature);
  }
  if (trace) {
    *trace = SinkhornTrace{};
    trace->transposed = transposed;
    trace->square = square;
    trace->temperature = temperature;
    trace->start = x;
  }
  for (int it = 0; it < iterations; ++it) {
    auto d1 = normalise(x, true, false);
    if (trace) {
      trace->divisors.push_back(std::move(d1));
      trace->after.push_back(x);
    }
    auto d2 = normalise(x, false, !square);
    if (trace) {
      trace->divisors.push_back(std::move(d2));
      trace->after.push_back(x);
    }
  }
  return transposed ? transpose(x) : x;
}

Matrix sinkhorn_backward(const SinkhornTrace& t, const Matrix& d_out) {
  if (t.start.empty()) return Matrix(d_out.rows(), d_out.cols());
  Matrix g = t.transposed ? transpose(d_out) : d_out;
  for (std::size_t step = t.after.size(); step-- > 0;) {
    const bool rows = step % 2 == 0;
    normalise_backward(t.after[step], t.divisors[step], rows, !rows && !t.square, g);
  }
  for (std::size_t i = 0; i < g.storage().size(); ++i) {
    g.storage()[i] *= t.start.storage()[i] / t.temperature;
  }
  return t.transposed ? transpose(g) : g;
}

std::vector<Match> extract_matches(const Matrix& normalized, double threshold) {
  std::vector<Match> cand;
  for (std::size_t k = 0; k < normalized.rows(); ++k) {
    for (std::size_t m = 0; m < normalized.cols(); ++m) {
      if (normalized(k, m) >= threshold) {
        cand.push_back({static_cast<int>(k), static_cast<int>(m), normalized(k, m)});
      }
    }
  }
  std::stable_sort(cand.begin(), cand.end(),
                   [](const Match& a, const Match& b) { return a.score > b.score; });
  std::vector<char> row_used(normalized.rows(), 0), col_used(normalized.cols(), 0);
  std::vector<Match> out;
  for (const auto& c : cand) {
    if (row_used[c.detection] || col_used[c.track]) continue;
    row_used[c.detection] = col_used[c.track] = 1;
    out.push_back(c);
  }
  return out;
}

DetectionSummary summarize(const detect::Cluster& cluster, const core::RadarFrame& frame,
                           std::size_t embedding_channels) {
  DetectionSummary s;
  s.descriptor = aggregate_descriptor(cluster, frame, embedding_channels);
  s.point_indices = cluster.point_indices;
  s.centroid = core::Vec3(s.descriptor[0], s.descriptor[1], s.descriptor[2]);
  for (std::size_t r = 0; r < cluster.flow_rows.rows(); ++r) {
    for (int k = 0; k < 3; ++k) s.mean_flow[k] += cluster.flow_rows(r, k);
  }
  s.mean_flow /= static_cast<double>(cluster.flow_rows.rows());
  return s;
}

TrackSet update_tracks(const TrackSet& tracks, const std::vector<DetectionSummary>& detections,
                       const std::vector<Match>& matches, const core::RadarFrame& frame,
                       const AssocConfig& cfg) {
  std::unordered_set<int> ids;
  for (const auto& t : tracks.tracks) {
    RADMOT_EXPECT(ids.insert(t.id).second, "update_tracks: duplicate track id");
    RADMOT_EXPECT(t.id < tracks.next_id, "update_tracks: next_id not above every live id");
  }
  std::vector<int> det_track(detections.size(), -1);
  std::vector<double> det_score(detections.size(), 0.0);
  std::vector<char> track_matched(tracks.tracks.size(), 0);
  for (const auto& m : matches) {
    RADMOT_EXPECT(m.detection >= 0 && m.detection < static_cast<int>(detections.size()) &&
                       m.track >= 0 && m.track < static_cast<int>(tracks.tracks.size()),
                   "update_tracks: match index out of range");
    RADMOT_EXPECT(det_track[m.detection] < 0 && !track_matched[m.track],
                   "update_tracks: matches are not one-to-one");
    det_track[m.detection] = m.track;
    det_score[m.detection] = m.score;
    track_matched[m.track] = 1;
  }

  TrackSet out;
  out.next_id = tracks.next_id;
  for (std::size_t k = 0; k < detections.size(); ++k) {
    const auto& d = detections[k];
    Track t;
    const core::Vec3 world = frame.ego_pose.apply(d.centroid);
    if (det_track[k] >= 0) {
      const Track& prev = tracks.tracks[det_track[k]];
      t.id = prev.id;
      t.confidence = std::clamp(det_score[k], 0.0, 1.0);
      t.age = prev.age + 1;
      t.displacement_world = world - prev.centroid_world;
    } else {
      t.id = out.next_id++;
      t.confidence = cfg.new_track_confidence;
    }
    t.descriptor = d.descriptor;
    t.point_indices = d.point_indices;
    t.last_seen = frame.frame_index;
    t.centroid = d.centroid;
    t.mean_flow = d.mean_flow;
    t.centroid_world = world;
    out.tracks.push_back(std::move(t));
  }
  for (std::size_t m = 0; m < tracks.tracks.size(); ++m) {
    if (track_matched[m]) continue;
    Track t = tracks.tracks[m];
    if (++t.missed > cfg.max_missed_frames) continue;
    ++t.age;
    out.tracks.push_back(std::move(t));
  }
  return out;
}

std::vector<std::pair<int, int>> hungarian(const Matrix& cost) {
  const bool transposed = cost.rows() > cost.cols();
  const Matrix c = transposed ? transpose(cost) : cost;
  const std::size_t n = c.rows();
  const std::size_t m = c.cols();
  std::vector<std::pair<int, int>> out;
  if (n == 0) return out;
  // Potentials formulation, 1-based with a virtual column 0.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = c(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] == 0) continue;
    const int r = static_cast<int>(p[j] - 1);
    const int col = static_cast<int>(j - 1);
    out.emplace_back(transposed ? col : r, transposed ? r : col);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Match> baseline_match(const TrackSet& tracks,
                                  const std::vector<DetectionSummary>& detections,
                                  const core::RadarFrame& frame, Matcher method,
                                  double max_distance) {
  const std::size_t k = detections.size();
  const std::size_t m = tracks.tracks.size();
  Matrix cost(k, m);
  for (std::size_t a = 0; a < k; ++a) {
    const core::Vec3 world = frame.ego_pose.apply(detections[a].centroid);
    for (std::size_t b = 0; b < m; ++b) {
      const auto& t = tracks.tracks[b];
      cost(a, b) = (t.centroid_world + t.displacement_world - world).norm();
    }
  }
  std::vector<Match> out;
  auto accept = [&](int a, int b) {
    if (cost(a, b) <= max_distance) out.push_back({a, b, 1.0 / (1.0 + cost(a, b))});
  };
  if (method == Matcher::kHungarian) {
    for (const auto& [a, b] : hungarian(cost)) accept(a, b);
    return out;
  }
  std::vector<std::pair<int, int>> pairs;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < m; ++b) pairs.emplace_back(static_cast<int>(a), static_cast<int>(b));
  }
  std::stable_sort(pairs.begin(), pairs.end(), [&](const auto& x, const auto& y) {
    return cost(x.first, x.second) < cost(y.first, y.second);
  });
  std::vector<char> ru(k, 0), cu(m, 0);
  for (const auto& [a, b] : pairs) {
    if (ru[a] || cu[b]) continue;
    ru[a] = cu[b] = 1;
    accept(a, b);
  }
  std::sort(out.begin(), out.end(),
            [](const Match& x, const Match& y) { return x.detection < y.detection; });
  return out;
}

nn::WeightStore geometric_affinity_prior(const AssocConfig& cfg, double scale) {
  const AffinityNet net(cfg.descriptor_width(), cfg.affinity_hidden);
  auto w = nn::WeightStore::zeros(net.specs());
  const std::size_t layers = cfg.affinity_hidden.size() + 1;
  RADMOT_EXPECT(!cfg.affinity_hidden.empty() && cfg.affinity_hidden.front() >= 6,
                 "geometric prior needs a first hidden layer of at least 6 units");
  auto& w0 = w.at("affinity.layer0.w");
  const std::size_t in = cfg.descriptor_width();
  for (std::size_t k = 0; k < 3; ++k) {
    w0.values[k * in + k] = 1.0;
    w0.values[(3 + k) * in + k] = -1.0;
  }
  // leaky(x) + leaky(-x) = 0.9 |x|; later hidden layers pass the six units through.
  for (std::size_t l = 1; l + 1 < layers; ++l) {
    auto& wl = w.at("affinity.layer" + std::to_string(l) + ".w");
    const std::size_t cols = wl.cols();
    RADMOT_EXPECT(wl.rows() >= 6, "geometric prior needs hidden layers of at least 6 units");
    for (std::size_t u = 0; u < 6; ++u) wl.values[u * cols + u] = 1.0;
  }
  auto& wl = w.at("affinity.layer" + std::to_string(layers - 1) + ".w");
  for (std::size_t u = 0; u < 6; ++u) wl.values[u] = -scale;
  return w;
}

std::string track_records_jsonl(const TrackSet& tracks, std::int64_t frame_index) {
  std::string out;
  for (const auto& t : tracks.tracks) {
    if (t.last_seen != frame_index) continue;
    nlohmann::json j;
    j["frame_index"] = frame_index;
    j["track_id"] = t.id;
    j["confidence"] = t.confidence;
    j["point_indices"] = t.point_indices;
    j["centroid"] = {t.centroid.x(), t.centroid.y(), t.centroid.z()};
    j["mean_flow"] = {t.mean_flow.x(), t.mean_flow.y(), t.mean_flow.z()};
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace radmot::assoc
