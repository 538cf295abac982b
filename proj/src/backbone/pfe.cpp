// SPDX-License-Identifier: Apache-2.0

#include "radmot/backbone/pfe.hpp"

#include <limits>
#include <numeric>

#include "radmot/backbone/neighbors.hpp"
#include "radmot/common/errors.hpp"
#include "radmot/kernels/kernels.hpp"
#include "radmot/nn/layers.hpp"

namespace radmot::backbone {

using nn::GradientStore;
using nn::Tensor;
using nn::WeightStore;

void PfeConfig::validate() const {
  for (int s = 0; s < 3; ++s) {
    if (!(sa_radii[s] > 0.0)) throw ValidationError("pfe: radii must be positive");
    if (s > 0 && !(sa_radii[s] > sa_radii[s - 1])) {
      throw ValidationError("pfe: radii must be strictly increasing");
    }
    if (sa_neighbors[s] <= 0 || sa_channels[s] <= 0 || fp_channels[s] <= 0) {
      throw ValidationError("pfe: neighbour and channel counts must be > 0");
    }
  }
  if (global_dim <= 0) throw ValidationError("pfe: global_dim must be > 0");
}

std::size_t PfeConfig::local_width() const {
  return static_cast<std::size_t>(fp_channels[0] + fp_channels[1] + fp_channels[2]);
}

PointFeatureEncoder::PointFeatureEncoder(std::string prefix, PfeConfig cfg,
                                         std::size_t extra_features)
    : prefix_(std::move(prefix)), cfg_(cfg), extra_(extra_features) {
  cfg_.validate();
}

std::string PointFeatureEncoder::name(int scale, const char* what) const {
  return prefix_ + "." + what + std::to_string(scale);
}

std::vector<nn::TensorSpec> PointFeatureEncoder::specs() const {
  std::vector<nn::TensorSpec> out;
  for (int s = 0; s < 3; ++s) {
    const auto c = static_cast<std::size_t>(cfg_.sa_channels[s]);
    const auto f = static_cast<std::size_t>(cfg_.fp_channels[s]);
    out.push_back({name(s, "sa") + ".w_pos", {c, 3}});
    out.push_back({name(s, "sa") + ".w_feat", {c, extra_}});
    out.push_back({name(s, "sa") + ".b", {c}});
    out.push_back({name(s, "fp") + ".w", {f, c}});
    out.push_back({name(s, "fp") + ".b", {f}});
  }
  const auto g = static_cast<std::size_t>(cfg_.global_dim);
  out.push_back({prefix_ + ".global.w", {g, cfg_.local_width()}});
  out.push_back({prefix_ + ".global.b", {g}});
  return out;
}

PointFeatureEncoder::Output PointFeatureEncoder::forward(const Matrix& positions,
                                                         const Matrix& extra,
                                                         const WeightStore& w,
                                                         Cache* cache) const {
  const std::size_t n = positions.rows();
  RADMOT_EXPECT(positions.cols() == 3, "pfe: positions must be N x 3");
  RADMOT_EXPECT(extra.rows() == n && extra.cols() == extra_, "pfe: extra feature shape mismatch");
  const auto gdim = static_cast<std::size_t>(cfg_.global_dim);

  Output out;
  if (n == 0) {
    out.local = Matrix(0, cfg_.local_width());
    out.pre_pool = Matrix(0, gdim);
    out.global.assign(gdim, 0.0);
    return out;
  }

  Cache local_cache;
  Cache& c = cache ? *cache : local_cache;
  c.positions = positions;
  c.extra = extra;

  std::array<Matrix, 3> fp_out;
  for (int s = 0; s < 3; ++s) {
    const auto ch = static_cast<std::size_t>(cfg_.sa_channels[s]);
    const int k = cfg_.sa_neighbors[s];
    c.neighbours[s] = ball_query(positions, cfg_.sa_radii[s], k);

    // z_ij = W_feat f_j + W_pos (x_j - x_i) + b = R_j - Q_i + b with
    // R = F W_feat^T + X W_pos^T and Q = X W_pos^T.
    const Tensor& w_pos = w.at(name(s, "sa") + ".w_pos");
    const Tensor& w_feat = w.at(name(s, "sa") + ".w_feat");
    const Tensor& bias = w.at(name(s, "sa") + ".b");
    const Matrix q = nn::linear(positions, w_pos, nullptr);
    Matrix r = q;
    if (extra_ > 0) {
      const Matrix p = nn::linear(extra, w_feat, nullptr);
      for (std::size_t i = 0; i < r.storage().size(); ++i) r.storage()[i] += p.storage()[i];
    }

    Matrix pre(n, ch, -std::numeric_limits<double>::infinity());
    std::vector<std::int32_t> arg(n * ch, 0);
    for (std::size_t i = 0; i < n; ++i) {
      double* zi = pre.row(i).data();
      std::int32_t* ai = arg.data() + i * ch;
      for (int slot = 0; slot < k; ++slot) {
        const std::int32_t j = c.neighbours[s][i * k + slot];
        kernels::max_update(r.row(j).data(), zi, ai, j, ch);
      }
      const double* qi = q.row(i).data();
      for (std::size_t ci = 0; ci < ch; ++ci) zi[ci] += bias.values[ci] - qi[ci];
    }
    Matrix act = pre;
    nn::leaky_relu_inplace(act);
    c.sa_pre[s] = std::move(pre);
    c.sa_arg[s] = std::move(arg);

    Matrix fpre = nn::linear(act, w.at(name(s, "fp") + ".w"), &w.at(name(s, "fp") + ".b"));
    c.sa_out[s] = std::move(act);
    fp_out[s] = fpre;
    nn::leaky_relu_inplace(fp_out[s]);
    c.fp_pre[s] = std::move(fpre);
  }
  c.local = hconcat({&fp_out[0], &fp_out[1], &fp_out[2]});

  c.pool_pre = nn::linear(c.local, w.at(prefix_ + ".global.w"), &w.at(prefix_ + ".global.b"));
  Matrix pooled_in = c.pool_pre;
  nn::leaky_relu_inplace(pooled_in);
  out.global.assign(gdim, -std::numeric_limits<double>::infinity());
  c.pool_arg.assign(gdim, 0);
  for (std::size_t i = 0; i < n; ++i) {
    kernels::max_update(pooled_in.row(i).data(), out.global.data(), c.pool_arg.data(),
                        static_cast<std::int32_t>(i), gdim);
  }
  out.local = c.local;
  out.pre_pool = std::move(pooled_in);
  return out;
}

Matrix PointFeatureEncoder::backward(const Cache& c, const Matrix& d_local,
                                     const std::vector<double>& d_global, const WeightStore& w,
                                     GradientStore& g, bool need_extra_grad) const {
  const std::size_t n = c.positions.rows();
  if (n == 0) return Matrix(0, extra_);
  const auto gdim = static_cast<std::size_t>(cfg_.global_dim);
  RADMOT_EXPECT(d_local.rows() == n && d_local.cols() == cfg_.local_width(),
                 "pfe backward: d_local shape mismatch");
  RADMOT_EXPECT(d_global.size() == gdim, "pfe backward: d_global size mismatch");

  // Global max-pool routes each channel's gradient to its winning point.
  Matrix d_pool(n, gdim);
  for (std::size_t ch = 0; ch < gdim; ++ch) d_pool(c.pool_arg[ch], ch) = d_global[ch];
  nn::leaky_relu_backward(c.pool_pre, d_pool);
  Matrix d_local_total;
  linear_backward(c.local, d_pool, w.at(prefix_ + ".global.w"), g[prefix_ + ".global.w"],
                  g[prefix_ + ".global.b"], &d_local_total);
  for (std::size_t i = 0; i < d_local_total.storage().size(); ++i) {
    d_local_total.storage()[i] += d_local.storage()[i];
  }

  Matrix d_extra(n, extra_);
  std::size_t offset = 0;
  for (int s = 0; s < 3; ++s) {
    const auto ch = static_cast<std::size_t>(cfg_.sa_channels[s]);
    const auto fw = static_cast<std::size_t>(cfg_.fp_channels[s]);
    Matrix d_fp = column_block(d_local_total, offset, fw);
    offset += fw;
    nn::leaky_relu_backward(c.fp_pre[s], d_fp);
    Matrix d_sa;
    linear_backward(c.sa_out[s], d_fp, w.at(name(s, "fp") + ".w"), g[name(s, "fp") + ".w"],
                    g[name(s, "fp") + ".b"], &d_sa);
    nn::leaky_relu_backward(c.sa_pre[s], d_sa);

    // z_i = R_{arg} - Q_i + b
    Matrix d_r(n, ch);
    Matrix d_q(n, ch);
    double* db = g[name(s, "sa") + ".b"];
    for (std::size_t i = 0; i < n; ++i) {
      const double* di = d_sa.row(i).data();
      const std::int32_t* ai = c.sa_arg[s].data() + i * ch;
      double* dqi = d_q.row(i).data();
      for (std::size_t ci = 0; ci < ch; ++ci) {
        d_r(ai[ci], ci) += di[ci];
        dqi[ci] -= di[ci];
        db[ci] += di[ci];
      }
    }
    // R contains Q as well, so Q's total gradient is dR + dQ.
    Matrix d_q_total = d_r;
    for (std::size_t i = 0; i < d_q_total.storage().size(); ++i) {
      d_q_total.storage()[i] += d_q.storage()[i];
    }
    linear_backward(c.positions, d_q_total, w.at(name(s, "sa") + ".w_pos"),
                    g[name(s, "sa") + ".w_pos"], nullptr, nullptr);
    if (extra_ > 0) {
      Matrix dx;
      linear_backward(c.extra, d_r, w.at(name(s, "sa") + ".w_feat"), g[name(s, "sa") + ".w_feat"],
                      nullptr, need_extra_grad ? &dx : nullptr);
      if (need_extra_grad) {
        for (std::size_t i = 0; i < dx.storage().size(); ++i) {
          d_extra.storage()[i] += dx.storage()[i];
        }
      }
    }
  }
  return need_extra_grad ? d_extra : Matrix();
}

Matrix attach_global(const Matrix& local, const std::vector<double>& global) {
  Matrix out(local.rows(), local.cols() + global.size());
  for (std::size_t i = 0; i < local.rows(); ++i) {
    auto src = local.row(i);
    auto dst = out.row(i);
    std::copy(src.begin(), src.end(), dst.begin());
    std::copy(global.begin(), global.end(), dst.begin() + static_cast<std::ptrdiff_t>(src.size()));
  }
  return out;
}

Matrix velocity_features(const core::RadarFrame& frame) {
  Matrix m(frame.size(), 2);
  for (std::size_t i = 0; i < frame.size(); ++i) {
    m(i, 0) = frame.points[i].rrv;
    m(i, 1) = frame.points[i].rrv_compensated;
  }
  return m;
}

BackboneFeatures pfe_forward(const core::RadarFrame& frame,
                             const std::optional<Matrix>& extra_features, const PfeConfig& cfg,
                             const WeightStore& weights, bool use_velocity,
                             const std::string& prefix) {
  Matrix extra = extra_features ? *extra_features
                                : (use_velocity ? velocity_features(frame) : Matrix(frame.size(), 0));
  PointFeatureEncoder enc(prefix, cfg, extra.cols());
  auto out = enc.forward(frame.positions(), extra, weights);
  BackboneFeatures f;
  f.per_point = attach_global(out.local, out.global);
  f.global_vec = std::move(out.global);
  RADMOT_EXPECT(f.per_point.cols() == cfg.output_width(), "pfe: output width contract");
  return f;
}

}  // namespace radmot::backbone
