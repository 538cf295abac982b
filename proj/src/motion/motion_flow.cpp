// SPDX-License-Identifier: Apache-2.0

#include "radmot/motion/motion_flow.hpp"

#include <cmath>

#include "radmot/common/errors.hpp"
#include "radmot/kernels/kernels.hpp"

namespace radmot::motion {

using nn::GradientStore;
using nn::WeightStore;

void FlowConfig::validate() const {
  pfe.validate();
  if (max_gap < 1) throw ValidationError("flow: max_gap must be >= 1");
  for (auto h : head_hidden) {
    if (h == 0) throw ValidationError("flow: head widths must be > 0");
  }
}

Matrix build_mixed_features(const core::RadarFrame& frame, const backbone::BackboneFeatures& g,
                            const backbone::CostVolume& h, bool use_velocity) {
  const std::size_t n = frame.size();
  RADMOT_EXPECT(g.per_point.rows() == n, "mixed features: backbone row count mismatch");
  RADMOT_EXPECT(h.per_point.rows() == n, "mixed features: cost volume row count mismatch");
  const std::size_t head = use_velocity ? 5 : 3;
  Matrix out(n, head + g.per_point.cols() + h.per_point.cols());
  for (std::size_t i = 0; i < n; ++i) {
    auto row = out.row(i);
    const auto& p = frame.points[i];
    row[0] = p.position.x();
    row[1] = p.position.y();
    row[2] = p.position.z();
    if (use_velocity) {
      row[3] = p.rrv;
      row[4] = p.rrv_compensated;
    }
    std::copy(g.per_point.row(i).begin(), g.per_point.row(i).end(), row.begin() + head);
    std::copy(h.per_point.row(i).begin(), h.per_point.row(i).end(),
              row.begin() + head + g.per_point.cols());
  }
  return out;
}

GruCell::GruCell(std::string prefix, std::size_t input_dim, std::size_t hidden_dim)
    : prefix_(std::move(prefix)), input_(input_dim), hidden_(hidden_dim) {}

std::vector<nn::TensorSpec> GruCell::specs() const {
  std::vector<nn::TensorSpec> out;
  for (const char* gate : {"z", "r", "h"}) {
    out.push_back({prefix_ + ".w_" + gate, {hidden_, input_}});
    out.push_back({prefix_ + ".u_" + gate, {hidden_, hidden_}});
    out.push_back({prefix_ + ".b_" + gate, {hidden_}});
  }
  return out;
}

std::vector<double> GruCell::forward(const std::vector<double>& x, const std::vector<double>& h,
                                     const WeightStore& w, Cache* cache) const {
  RADMOT_EXPECT(x.size() == input_ && h.size() == hidden_, "gru: input/hidden width mismatch");
  auto gate = [&](const char* name, const std::vector<double>& hh) {
    auto a = nn::matvec(w.at(prefix_ + ".w_" + name), x);
    const auto b = nn::matvec(w.at(prefix_ + ".u_" + name), hh);
    const auto& bias = w.at(prefix_ + ".b_" + name).values;
    for (std::size_t i = 0; i < hidden_; ++i) a[i] += b[i] + bias[i];
    return a;
  };
  auto z = gate("z", h);
  auto r = gate("r", h);
  for (auto& v : z) v = nn::sigmoid(v);
  for (auto& v : r) v = nn::sigmoid(v);
  std::vector<double> rh(hidden_);
  for (std::size_t i = 0; i < hidden_; ++i) rh[i] = r[i] * h[i];
  auto n = gate("h", rh);
  for (auto& v : n) v = std::tanh(v);
  std::vector<double> out(hidden_);
  for (std::size_t i = 0; i < hidden_; ++i) out[i] = (1.0 - z[i]) * h[i] + z[i] * n[i];
  if (cache) *cache = Cache{x, h, z, r, n, rh};
  return out;
}

std::vector<double> GruCell::backward(const Cache& c, const std::vector<double>& dh_next,
                                      const WeightStore& w, GradientStore& g,
                                      std::vector<double>* dh_prev) const {
  std::vector<double> dz(hidden_), dn(hidden_), dh(hidden_);
  for (std::size_t i = 0; i < hidden_; ++i) {
    dh[i] = dh_next[i] * (1.0 - c.z[i]);
    dz[i] = dh_next[i] * (c.n[i] - c.h[i]) * c.z[i] * (1.0 - c.z[i]);
    dn[i] = dh_next[i] * c.z[i] * (1.0 - c.n[i] * c.n[i]);
  }
  std::vector<double> dx(input_, 0.0);
  std::vector<double> tmp;
  auto accumulate_x = [&](const char* gate, const std::vector<double>& d) {
    nn::matvec_backward(w.at(prefix_ + ".w_" + gate), c.x, d, g[prefix_ + ".w_" + gate], &tmp);
    kernels::axpy(1.0, tmp.data(), dx.data(), input_);
    kernels::axpy(1.0, d.data(), g[prefix_ + ".b_" + gate], hidden_);
  };

  accumulate_x("h", dn);
  std::vector<double> d_rh;
  nn::matvec_backward(w.at(prefix_ + ".u_h"), c.rh, dn, g[prefix_ + ".u_h"], &d_rh);
  std::vector<double> dr(hidden_);
  for (std::size_t i = 0; i < hidden_; ++i) {
    dr[i] = d_rh[i] * c.h[i] * c.r[i] * (1.0 - c.r[i]);
    dh[i] += d_rh[i] * c.r[i];
  }
  accumulate_x("z", dz);
  accumulate_x("r", dr);
  nn::matvec_backward(w.at(prefix_ + ".u_z"), c.h, dz, g[prefix_ + ".u_z"], &tmp);
  kernels::axpy(1.0, tmp.data(), dh.data(), hidden_);
  nn::matvec_backward(w.at(prefix_ + ".u_r"), c.h, dr, g[prefix_ + ".u_r"], &tmp);
  kernels::axpy(1.0, tmp.data(), dh.data(), hidden_);
  if (dh_prev) *dh_prev = std::move(dh);
  return dx;
}

FlowModule::FlowModule(FlowConfig cfg, std::size_t mixed_width)
    : cfg_(std::move(cfg)), mixed_(mixed_width) {
  cfg_.validate();
  RADMOT_EXPECT(mixed_ >= 3, "flow: mixed features need the position block");
  pfe_ = backbone::PointFeatureEncoder("flow_pfe", cfg_.pfe, mixed_ - 3);
  gru_ = GruCell("gru", cfg_.hidden_width(), cfg_.hidden_width());
  std::vector<std::size_t> dims{cfg_.embedding_width()};
  dims.insert(dims.end(), cfg_.head_hidden.begin(), cfg_.head_hidden.end());
  dims.push_back(3);
  head_ = nn::Mlp("flow_head", dims, false);
}

std::vector<nn::TensorSpec> FlowModule::specs() const {
  auto out = pfe_.specs();
  for (auto& s : gru_.specs()) out.push_back(s);
  for (auto& s : head_.specs()) out.push_back(s);
  return out;
}

FlowEmbedding FlowModule::embed(const Matrix& mixed, GruState& state, const WeightStore& w,
                                Cache* cache) const {
  RADMOT_EXPECT(mixed.cols() == mixed_, "flow: mixed feature width mismatch");
  const std::size_t n = mixed.rows();
  const Matrix pos = column_block(mixed, 0, 3);
  const Matrix extra = column_block(mixed, 3, mixed_ - 3);
  Cache local;
  Cache& c = cache ? *cache : local;
  c.n = n;
  const auto enc = pfe_.forward(pos, extra, w, &c.pfe);
  const auto hid = cfg_.hidden_width();
  if (!state.initialized || state.hidden.size() != hid) state.hidden.assign(hid, 0.0);
  state.hidden = gru_.forward(enc.global, state.hidden, w, &c.gru);
  state.initialized = true;
  return FlowEmbedding{backbone::attach_global(enc.local, state.hidden)};
}

SceneFlow FlowModule::predict(const FlowEmbedding& e, const WeightStore& w, Cache* cache) const {
  RADMOT_EXPECT(e.per_point.cols() == cfg_.embedding_width(), "flow: embedding width mismatch");
  return SceneFlow{head_.forward(e.per_point, w, cache ? &cache->head : nullptr)};
}

Matrix FlowModule::backward(const Cache& c, const Matrix& d_flow, const Matrix& d_embedding,
                            const WeightStore& w, GradientStore& g) const {
  const std::size_t n = c.n;
  const std::size_t fe = cfg_.embedding_local_width();
  const std::size_t hid = cfg_.hidden_width();
  Matrix d_e(n, cfg_.embedding_width());
  if (!d_flow.empty()) d_e = head_.backward(c.head, d_flow, w, g, true);
  if (!d_embedding.empty()) {
    for (std::size_t i = 0; i < d_e.storage().size(); ++i) d_e.storage()[i] += d_embedding.storage()[i];
  }
  const Matrix d_local = column_block(d_e, 0, fe);
  std::vector<double> d_hidden(hid, 0.0);
  for (std::size_t i = 0; i < n; ++i) kernels::axpy(1.0, d_e.row(i).data() + fe, d_hidden.data(), hid);
  const auto d_global = gru_.backward(c.gru, d_hidden, w, g, nullptr);
  if (n == 0) return Matrix(0, mixed_ - 3);
  return pfe_.backward(c.pfe, d_local, d_global, w, g, true);
}

FlowEmbedding flow_embed(const Matrix& mixed, const FlowConfig& cfg, GruState& gru,
                         const WeightStore& weights) {
  return FlowModule(cfg, mixed.cols()).embed(mixed, gru, weights);
}

SceneFlow predict_flow(const FlowEmbedding& embedding, const FlowConfig& cfg,
                       const WeightStore& weights) {
  const FlowModule m(cfg, 3);
  return m.predict(embedding, weights);
}

}  // namespace radmot::motion
