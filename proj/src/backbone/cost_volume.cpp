// SPDX-License-Identifier: Apache-2.0

#include "radmot/backbone/cost_volume.hpp"

#include "radmot/backbone/neighbors.hpp"
#include "radmot/common/errors.hpp"
#include "radmot/kernels/kernels.hpp"
#include "radmot/nn/layers.hpp"

namespace radmot::backbone {

using nn::GradientStore;
using nn::WeightStore;

namespace {
constexpr double kDistanceFloor = 1e-8;

void add_into(Matrix& dst, const Matrix& src) {
  for (std::size_t i = 0; i < dst.storage().size(); ++i) dst.storage()[i] += src.storage()[i];
}
}  // namespace

void CostVolumeConfig::validate() const {
  if (k_neighbors < 1) throw ValidationError("cost volume: k_neighbors must be >= 1");
  if (out_dim < 1) throw ValidationError("cost volume: out_dim must be >= 1");
}

CostVolumeLayer::CostVolumeLayer(CostVolumeConfig cfg, std::size_t feature_dim, std::string prefix)
    : cfg_(cfg), feat_(feature_dim), prefix_(std::move(prefix)) {
  cfg_.validate();
}

std::vector<nn::TensorSpec> CostVolumeLayer::specs() const {
  const auto h = static_cast<std::size_t>(cfg_.out_dim);
  std::vector<nn::TensorSpec> out{{prefix_ + ".layer0.w_diff", {h, feat_}}};
  if (cfg_.include_current_features) out.push_back({prefix_ + ".layer0.w_cur", {h, feat_}});
  out.push_back({prefix_ + ".layer0.w_pos", {h, 3}});
  out.push_back({prefix_ + ".layer0.b", {h}});
  out.push_back({prefix_ + ".layer1.w", {h, h}});
  out.push_back({prefix_ + ".layer1.b", {h}});
  return out;
}

Matrix CostVolumeLayer::forward(const Matrix& cur_pos, const Matrix& cur_feat,
                                const Matrix& prev_pos, const Matrix& prev_feat,
                                const WeightStore& w, Cache* cache) const {
  const std::size_t n = cur_pos.rows();
  const auto h = static_cast<std::size_t>(cfg_.out_dim);
  RADMOT_EXPECT(cur_feat.rows() == n && cur_feat.cols() == feat_,
                 "cost volume: current feature shape mismatch");
  RADMOT_EXPECT(prev_feat.rows() == prev_pos.rows() && prev_feat.cols() == feat_,
                 "cost volume: previous feature shape mismatch");
  Matrix out(n, h);
  if (n == 0 || prev_pos.rows() == 0) {
    if (cache) *cache = Cache{};
    return out;
  }

  Cache local;
  Cache& c = cache ? *cache : local;
  c.cur_pos = cur_pos;
  c.prev_pos = prev_pos;
  c.cur_feat = cur_feat;
  c.prev_feat = prev_feat;

  const KnnResult nn_res = knn(cur_pos, prev_pos, cfg_.k_neighbors);
  const int k = nn_res.k;
  c.k = k;
  c.nbr = nn_res.index;
  c.weight.resize(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (int s = 0; s < k; ++s) {
      const double inv = 1.0 / (nn_res.distance[i * k + s] + kDistanceFloor);
      c.weight[i * k + s] = inv;
      total += inv;
    }
    for (int s = 0; s < k; ++s) c.weight[i * k + s] /= total;
  }

  // layer0 pre-activation = A_j - A_i (+ C_i) + P_j - P_i + b, with A = W_diff g and P = W_pos x.
  const auto& w_diff = w.at(prefix_ + ".layer0.w_diff");
  const auto& w_pos = w.at(prefix_ + ".layer0.w_pos");
  const auto& b0 = w.at(prefix_ + ".layer0.b");
  Matrix a_prev = nn::linear(prev_feat, w_diff, nullptr);
  add_into(a_prev, nn::linear(prev_pos, w_pos, nullptr));
  Matrix a_cur = nn::linear(cur_feat, w_diff, nullptr);
  add_into(a_cur, nn::linear(cur_pos, w_pos, nullptr));
  if (cfg_.include_current_features) {
    const Matrix cc = nn::linear(cur_feat, w.at(prefix_ + ".layer0.w_cur"), nullptr);
    for (std::size_t i = 0; i < a_cur.storage().size(); ++i) a_cur.storage()[i] -= cc.storage()[i];
  }

  c.pre1 = Matrix(n * k, h);
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a_cur.row(i).data();
    for (int s = 0; s < k; ++s) {
      const double* aj = a_prev.row(c.nbr[i * k + s]).data();
      double* z = c.pre1.row(i * k + s).data();
      for (std::size_t o = 0; o < h; ++o) z[o] = aj[o] - ai[o] + b0.values[o];
    }
  }
  c.h1 = c.pre1;
  nn::leaky_relu_inplace(c.h1);
  c.pre2 = nn::linear(c.h1, w.at(prefix_ + ".layer1.w"), &w.at(prefix_ + ".layer1.b"));
  Matrix h2 = c.pre2;
  nn::leaky_relu_inplace(h2);

  for (std::size_t i = 0; i < n; ++i) {
    double* oi = out.row(i).data();
    for (int s = 0; s < k; ++s) {
      kernels::axpy(c.weight[i * k + s], h2.row(i * k + s).data(), oi, h);
    }
  }
  return out;
}

void CostVolumeLayer::backward(const Cache& c, const Matrix& d_out, const WeightStore& w,
                               GradientStore& g, Matrix* d_cur_feat, Matrix* d_prev_feat) const {
  const std::size_t n = c.cur_pos.rows();
  const auto h = static_cast<std::size_t>(cfg_.out_dim);
  if (d_cur_feat) *d_cur_feat = Matrix(n, feat_);
  if (d_prev_feat) *d_prev_feat = Matrix(c.prev_pos.rows(), feat_);
  if (c.k == 0 || n == 0) return;
  const int k = c.k;

  Matrix d_h2(n * k, h);
  for (std::size_t i = 0; i < n; ++i) {
    for (int s = 0; s < k; ++s) {
      kernels::axpy(c.weight[i * k + s], d_out.row(i).data(), d_h2.row(i * k + s).data(), h);
    }
  }
  nn::leaky_relu_backward(c.pre2, d_h2);
  Matrix d_h1;
  nn::linear_backward(c.h1, d_h2, w.at(prefix_ + ".layer1.w"), g[prefix_ + ".layer1.w"],
                      g[prefix_ + ".layer1.b"], &d_h1);
  nn::leaky_relu_backward(c.pre1, d_h1);

  Matrix d_a_prev(c.prev_pos.rows(), h);
  Matrix d_a_cur(n, h);
  double* db0 = g[prefix_ + ".layer0.b"];
  for (std::size_t i = 0; i < n; ++i) {
    double* dai = d_a_cur.row(i).data();
    for (int s = 0; s < k; ++s) {
      const double* dz = d_h1.row(i * k + s).data();
      kernels::axpy(1.0, dz, d_a_prev.row(c.nbr[i * k + s]).data(), h);
      kernels::axpy(-1.0, dz, dai, h);
      kernels::axpy(1.0, dz, db0, h);
    }
  }

  const auto& w_diff = w.at(prefix_ + ".layer0.w_diff");
  const auto& w_pos = w.at(prefix_ + ".layer0.w_pos");
  Matrix dx;
  nn::linear_backward(c.prev_feat, d_a_prev, w_diff, g[prefix_ + ".layer0.w_diff"], nullptr,
                      d_prev_feat ? &dx : nullptr);
  if (d_prev_feat) *d_prev_feat = std::move(dx);
  nn::linear_backward(c.prev_pos, d_a_prev, w_pos, g[prefix_ + ".layer0.w_pos"], nullptr, nullptr);
  nn::linear_backward(c.cur_feat, d_a_cur, w_diff, g[prefix_ + ".layer0.w_diff"], nullptr,
                      d_cur_feat ? &dx : nullptr);
  if (d_cur_feat) *d_cur_feat = dx;
  nn::linear_backward(c.cur_pos, d_a_cur, w_pos, g[prefix_ + ".layer0.w_pos"], nullptr, nullptr);
  if (cfg_.include_current_features) {
    Matrix neg = d_a_cur;
    for (auto& v : neg.storage()) v = -v;
    nn::linear_backward(c.cur_feat, neg, w.at(prefix_ + ".layer0.w_cur"),
                        g[prefix_ + ".layer0.w_cur"], nullptr, d_cur_feat ? &dx : nullptr);
    if (d_cur_feat) add_into(*d_cur_feat, dx);
  }
}

CostVolume cost_volume(const BackboneFeatures& cur, const Matrix& cur_positions,
                       const BackboneFeatures& prev, const Matrix& prev_positions,
                       const CostVolumeConfig& cfg, const WeightStore& weights) {
  CostVolumeLayer layer(cfg, cur.per_point.cols());
  CostVolume cv{layer.forward(cur_positions, cur.per_point, prev_positions, prev.per_point,
                              weights)};
  RADMOT_EXPECT(cv.per_point.cols() == static_cast<std::size_t>(cfg.out_dim),
                 "cost volume: output width contract");
  return cv;
}

}  // namespace radmot::backbone
