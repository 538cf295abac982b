// SPDX-License-Identifier: Apache-2.0

#include "radmot/model/network.hpp"

#include <algorithm>
#include <cmath>

#include "radmot/common/errors.hpp"

namespace radmot::model {

namespace {

std::size_t mixed_width(const ModelConfig& c) {
  return (c.use_velocity ? 5u : 3u) + c.pfe.output_width() + static_cast<std::size_t>(c.cost.out_dim);
}

// Splits d(per-point [local | broadcast global]) into the two PFE output grads.
void split_global(const Matrix& d, std::size_t local_width, Matrix& d_local,
                  std::vector<double>& d_global) {
  const std::size_t n = d.rows();
  const std::size_t gw = d.cols() - local_width;
  if (d_local.rows() != n || d_local.cols() != local_width) d_local = Matrix(n, local_width);
  if (d_global.size() != gw) d_global.assign(gw, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = d.row(i);
    auto lr = d_local.row(i);
    for (std::size_t c = 0; c < local_width; ++c) lr[c] += row[c];
    for (std::size_t c = 0; c < gw; ++c) d_global[c] += row[local_width + c];
  }
}

void add_block(Matrix& dst, const Matrix& src, std::size_t src_col) {
  for (std::size_t i = 0; i < dst.rows(); ++i)
    for (std::size_t c = 0; c < dst.cols(); ++c) dst(i, c) += src(i, src_col + c);
}

}  // namespace

void ModelConfig::validate() const {
  pfe.validate();
  cost.validate();
  flow.validate();
  detect.validate();
  assoc.validate();
  if (use_motion_module && flow.embedding_local_width() < assoc.descriptor_embedding)
    throw ValidationError("descriptor embedding channels exceed the flow embedding width");
  if (!use_motion_module && pfe.local_width() < assoc.descriptor_embedding)
    throw ValidationError("descriptor embedding channels exceed the backbone feature width");
}

nlohmann::json ModelConfig::manifest() const {
  const auto pfe_json = [](const backbone::PfeConfig& p) {
    return nlohmann::json{{"sa_radii", p.sa_radii},
                          {"sa_neighbors", p.sa_neighbors},
                          {"sa_channels", p.sa_channels},
                          {"fp_channels", p.fp_channels},
                          {"global_dim", p.global_dim}};
  };
  return {{"format", "radmot-weights"},
          {"pfe", pfe_json(pfe)},
          {"cost", {{"k_neighbors", cost.k_neighbors},
                    {"out_dim", cost.out_dim},
                    {"include_current_features", cost.include_current_features}}},
          {"flow_pfe", pfe_json(flow.pfe)},
          {"flow_head_hidden", flow.head_hidden},
          {"classifier_hidden", detect.classifier_hidden},
          {"affinity_hidden", assoc.affinity_hidden},
          {"descriptor_embedding", assoc.descriptor_embedding},
          {"use_velocity", use_velocity},
          {"use_motion_module", use_motion_module}};
}

Network::Network(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  pfe_ = backbone::PointFeatureEncoder("pfe", cfg_.pfe, cfg_.use_velocity ? 2 : 0);
  cost_ = backbone::CostVolumeLayer(cfg_.cost, cfg_.pfe.output_width(), "cost");
  cls_ = detect::MotionClassifier(static_cast<std::size_t>(cfg_.cost.out_dim),
                                  static_cast<std::size_t>(cfg_.detect.classifier_hidden));
  if (cfg_.use_motion_module) flow_ = motion::FlowModule(cfg_.flow, mixed_width(cfg_));
  affinity_ = assoc::AffinityNet(cfg_.assoc.descriptor_width(), cfg_.assoc.affinity_hidden);
}

std::vector<nn::TensorSpec> Network::specs() const {
  std::vector<nn::TensorSpec> out = pfe_.specs();
  for (auto&& s : cost_.specs()) out.push_back(std::move(s));
  for (auto&& s : cls_.specs()) out.push_back(std::move(s));
  if (cfg_.use_motion_module)
    for (auto&& s : flow_.specs()) out.push_back(std::move(s));
  for (auto&& s : affinity_.specs()) out.push_back(std::move(s));
  return out;
}

bool Network::is_stage1_tensor(const std::string& name) {
  return name.rfind("pfe.", 0) == 0 || name.rfind("cost.", 0) == 0 ||
         name.rfind("motion_cls.", 0) == 0;
}

nn::WeightStore Network::init_weights(std::uint64_t seed) const {
  return nn::WeightStore::glorot(specs(), seed, cfg_.manifest());
}

void Network::check_weights(const nn::WeightStore& w) const {
  w.verify(specs());
  const auto& m = w.manifest();
  if (!m.empty() && m != cfg_.manifest())
    throw ValidationError("weight manifest does not match the configured architecture");
}

std::size_t Network::embedding_width() const {
  return cfg_.use_motion_module ? cfg_.flow.embedding_width() : cfg_.pfe.output_width();
}

Matrix Network::extra_features(const core::RadarFrame& frame) const {
  return cfg_.use_velocity ? backbone::velocity_features(frame) : Matrix(frame.size(), 0);
}

PairOutput Network::forward_pair(const core::RadarFrame& cur, const core::RadarFrame& prev,
                                 motion::GruState& gru, const nn::WeightStore& w, bool run_flow,
                                 PairCache* cache) const {
  PairOutput out;
  const Matrix cur_pos = cur.positions();
  const Matrix prev_pos = prev.positions();
  const auto enc_cur = pfe_.forward(cur_pos, extra_features(cur), w, cache ? &cache->pfe_cur : nullptr);
  const auto enc_prev =
      pfe_.forward(prev_pos, extra_features(prev), w, cache ? &cache->pfe_prev : nullptr);
  out.features.per_point = backbone::attach_global(enc_cur.local, enc_cur.global);
  out.features.global_vec = enc_cur.global;
  const Matrix prev_feat = backbone::attach_global(enc_prev.local, enc_prev.global);

  out.cost.per_point = cost_.forward(cur_pos, out.features.per_point, prev_pos, prev_feat, w,
                                     cache ? &cache->cost : nullptr);
  const Matrix logits = cls_.logits(out.cost.per_point, w, cache ? &cache->cls : nullptr);
  out.logits.resize(logits.rows());
  out.scores.scores.resize(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    out.logits[i] = logits(i, 0);
    out.scores.scores[i] = nn::sigmoid(logits(i, 0));
  }
  if (cache) cache->scores = out.scores.scores;

  const std::size_t n = cur.size();
  if (cache) cache->ran_flow = false;
  if (!cfg_.use_motion_module) {
    out.embedding.per_point = out.features.per_point;
    out.flow.vectors = Matrix(n, 3);
    return out;
  }
  if (!run_flow) {
    out.flow.vectors = Matrix(n, 3);
    out.embedding.per_point = Matrix(n, cfg_.flow.embedding_width());
    return out;
  }
  const Matrix mixed = motion::build_mixed_features(cur, out.features, out.cost, cfg_.use_velocity);
  gru.advance(cur.frame_index, cfg_.flow.max_gap);
  out.embedding = flow_.embed(mixed, gru, w, cache ? &cache->flow : nullptr);
  out.flow = flow_.predict(out.embedding, w, cache ? &cache->flow : nullptr);
  if (cache) cache->ran_flow = true;
  return out;
}

void Network::backward_pair(const PairCache& c, const PairGrads& grads, const nn::WeightStore& w,
                            nn::GradientStore& g) const {
  const std::size_t n = c.cost.cur_pos.rows();
  const std::size_t f_g = cfg_.pfe.output_width();
  const std::size_t f_h = static_cast<std::size_t>(cfg_.cost.out_dim);
  const std::size_t local_w = cfg_.pfe.local_width();

  Matrix d_g(n, f_g);
  Matrix d_h(n, f_h);

  if (!grads.d_scores.empty()) {
    RADMOT_EXPECT(grads.d_scores.size() == n, "backward_pair: score gradient size mismatch");
    Matrix d_logit(n, 1);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = c.scores[i];
      d_logit(i, 0) = grads.d_scores[i] * s * (1.0 - s);
      any = any || d_logit(i, 0) != 0.0;
    }
    if (any) add_block(d_h, cls_.backward(c.cls, d_logit, w, g), 0);
  }

  if (cfg_.use_motion_module) {
    if (c.ran_flow && (!grads.d_flow.empty() || !grads.d_embedding.empty())) {
      const Matrix d_mixed = flow_.backward(c.flow, grads.d_flow, grads.d_embedding, w, g);
      const std::size_t head = cfg_.use_velocity ? 2 : 0;  // RRV columns are inputs, not learned
      add_block(d_g, d_mixed, head);
      add_block(d_h, d_mixed, head + f_g);
    }
  } else if (!grads.d_embedding.empty()) {
    add_block(d_g, grads.d_embedding, 0);
  }

  Matrix d_cur_feat, d_prev_feat;
  cost_.backward(c.cost, d_h, w, g, &d_cur_feat, &d_prev_feat);
  if (d_cur_feat.rows() == n) add_block(d_g, d_cur_feat, 0);

  Matrix d_local;
  std::vector<double> d_global;
  split_global(d_g, local_w, d_local, d_global);
  pfe_.backward(c.pfe_cur, d_local, d_global, w, g, false);

  if (d_prev_feat.rows() > 0) {
    Matrix d_prev_local;
    std::vector<double> d_prev_global;
    split_global(d_prev_feat, local_w, d_prev_local, d_prev_global);
    pfe_.backward(c.pfe_prev, d_prev_local, d_prev_global, w, g, false);
  }
}

std::vector<assoc::Descriptor> Network::descriptors(const detect::DetectionSet& dets,
                                                    const core::RadarFrame& frame,
                                                    std::vector<std::vector<int>>* argmax) const {
  std::vector<assoc::Descriptor> out;
  if (argmax) argmax->assign(dets.clusters.size(), {});
  for (std::size_t k = 0; k < dets.clusters.size(); ++k)
    out.push_back(assoc::aggregate_descriptor(dets.clusters[k], frame,
                                              cfg_.assoc.descriptor_embedding,
                                              argmax ? &(*argmax)[k] : nullptr));
  return out;
}

Matrix Network::associate(const std::vector<assoc::Descriptor>& dets,
                          const std::vector<assoc::Descriptor>& tracks, const nn::WeightStore& w,
                          AssocCache* cache) const {
  const Matrix raw = affinity_.raw(dets, tracks, w, cache ? &cache->affinity : nullptr);
  return assoc::sinkhorn(raw, cfg_.assoc.sinkhorn_iterations, cfg_.assoc.temperature,
                         cache ? &cache->sinkhorn : nullptr);
}

void Network::associate_backward(const AssocCache& cache, const Matrix& d_norm,
                                 const nn::WeightStore& w, nn::GradientStore& g, Matrix& d_flow,
                                 Matrix& d_embedding) const {
  const Matrix d_raw = assoc::sinkhorn_backward(cache.sinkhorn, d_norm);
  const Matrix d_desc = affinity_.backward(cache.affinity, d_raw, w, g);
  for (std::size_t k = 0; k < cache.argmax.size(); ++k)
    assoc::descriptor_backward(cache.argmax[k], d_desc.row(k).data(), d_flow, d_embedding);
}

}  // namespace radmot::model
