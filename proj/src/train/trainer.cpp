// SPDX-License-Identifier: Apache-2.0

#include "radmot/train/trainer.hpp"

#include <cmath>
#include <sstream>

#include "radmot/common/errors.hpp"
#include "radmot/core/sequence_io.hpp"

namespace radmot::train {

void TrainSchedule::validate() const {
  if (stage1_epochs < 0 || stage2_epochs < 0) throw ValidationError("epochs must be >= 0");
  if (!(stage1_lr > 0.0) || !(stage2_lr > 0.0)) throw ValidationError("learning rates must be > 0");
  if (!(lr_decay_per_epoch > 0.0 && lr_decay_per_epoch <= 1.0))
    throw ValidationError("lr_decay_per_epoch must lie in (0, 1]");
}

std::vector<std::vector<int>> teacher_clusters(const core::RadarFrame& frame,
                                               const PointLabels& labels,
                                               const detect::DetectConfig& cfg) {
  std::vector<int> candidates;
  for (std::size_t i = 0; i < labels.motion_mask.size(); ++i)
    if (labels.motion_mask[i]) candidates.push_back(static_cast<int>(i));
  if (candidates.empty()) return {};
  const Matrix zero_embedding(frame.size(), static_cast<std::size_t>(cfg.embedding_channels));
  const Matrix feats = detect::clustering_features(frame, labels.flow, zero_embedding, cfg);
  return detect::dbscan(feats, candidates, cfg.dbscan_eps, cfg.dbscan_min_points);
}

PairResult pair_objective(const model::Network& net, const nn::WeightStore& w,
                          const PairBatch& batch, motion::GruState& gru, const LossConfig& cfg,
                          int stage, nn::GradientStore* grads) {
  const bool full = stage >= 2;
  model::PairCache cache;
  const auto out = net.forward_pair(*batch.cur, *batch.prev, gru, w, full, grads ? &cache : nullptr);

  PairResult r;
  model::PairGrads pg;
  r.parts.seg = loss_seg(out.scores.scores, batch.labels.motion_mask, cfg.beta, cfg.log_epsilon,
                         grads ? &pg.d_scores : nullptr);
  if (!full) {
    r.total = r.parts.seg;
    if (grads) net.backward_pair(cache, pg, w, *grads);
    return r;
  }

  const bool motion = net.config().use_motion_module;
  r.parts.flow = loss_flow(out.flow.vectors, batch.labels.flow,
                           grads && motion ? &pg.d_flow : nullptr);

  detect::DetectionSet dets;
  for (const auto& idx : batch.clusters)
    dets.clusters.push_back(detect::make_cluster(idx, out.flow.vectors, out.embedding.per_point));
  model::AssocCache ac;
  r.descriptors = net.descriptors(dets, *batch.cur, &ac.argmax);

  Matrix d_norm;
  const bool has_aff = !r.descriptors.empty() && !batch.track_descriptors.empty();
  if (has_aff) {
    RADMOT_EXPECT(batch.affinity_labels.rows() == r.descriptors.size() &&
                       batch.affinity_labels.cols() == batch.track_descriptors.size(),
                   "pair_objective: affinity label shape mismatch");
    const Matrix p = net.associate(r.descriptors, batch.track_descriptors, w, &ac);
    r.parts.aff = loss_aff(p, batch.affinity_labels, cfg.log_epsilon, grads ? &d_norm : nullptr);
  }
  r.total = loss_total(r.parts, cfg);
  if (!grads) return r;

  for (auto& v : pg.d_scores) v *= cfg.alpha_seg;
  const std::size_t n = batch.cur->size();
  if (motion) {
    for (auto& v : pg.d_flow.storage()) v *= cfg.alpha_flow;
  } else {
    pg.d_flow = Matrix(n, 3);
  }
  pg.d_embedding = Matrix(n, net.embedding_width());
  if (has_aff) {
    for (auto& v : d_norm.storage()) v *= cfg.alpha_aff;
    net.associate_backward(ac, d_norm, w, *grads, pg.d_flow, pg.d_embedding);
  }
  if (!motion) pg.d_flow = Matrix();
  net.backward_pair(cache, pg, w, *grads);
  return r;
}

namespace {

bool finite_parts(const PairResult& r) {
  return std::isfinite(r.parts.flow) && std::isfinite(r.parts.seg) && std::isfinite(r.parts.aff) &&
         std::isfinite(r.total);
}

}  // namespace

TrainResult train(const model::Network& net, nn::WeightStore initial,
                  const std::vector<core::Sequence>& sequences, const TrainSchedule& schedule,
                  const LossConfig& cfg, const TrainOptions& options) {
  schedule.validate();
  cfg.validate();
  net.check_weights(initial);
  TrainResult result;
  result.weights = std::move(initial);
  nn::GradientStore grads(result.weights);
  long step = 0;

  for (int stage = 1; stage <= 2; ++stage) {
    const int epochs = stage == 1 ? schedule.stage1_epochs : schedule.stage2_epochs;
    const double lr0 = stage == 1 ? schedule.stage1_lr : schedule.stage2_lr;
    nn::Adam opt(lr0);
    const auto trainable = [stage](const std::string& name) {
      return stage == 2 || model::Network::is_stage1_tensor(name);
    };
    for (int epoch = 0; epoch < epochs; ++epoch) {
      const double lr = lr0 * std::pow(schedule.lr_decay_per_epoch, epoch);
      opt.set_lr(lr);
      EpochSummary summary{stage, epoch, 0, {}, 0.0, lr};
      for (const auto& seq : sequences) {
        motion::GruState gru;
        std::vector<assoc::Descriptor> prev_desc;
        std::vector<std::vector<int>> prev_clusters;
        std::vector<int> prev_ids;
        for (std::size_t t = 1; t < seq.frames.size(); ++t) {
          const auto& cur = seq.frames[t];
          const auto& prev = seq.frames[t - 1];
          PairBatch batch;
          batch.cur = &cur.frame;
          batch.prev = &prev.frame;
          batch.labels = label_points(cur.frame, prev.frame, cur.boxes, prev.boxes,
                                      cfg.motion_label_threshold);
          if (stage == 2) {
            batch.clusters = teacher_clusters(cur.frame, batch.labels, net.config().detect);
            batch.track_descriptors = prev_desc;
            batch.affinity_labels = label_affinity(batch.clusters, batch.labels.point_object_id,
                                                   prev_clusters, prev_ids);
          }
          grads.zero();
          const PairResult r = pair_objective(net, result.weights, batch, gru, cfg, stage, &grads);
          if (!finite_parts(r)) {
            std::ostringstream msg;
            msg << "non-finite loss at stage " << stage << ", epoch " << epoch << ", step " << step;
            throw DivergenceError(msg.str(), stage, epoch, step);
          }
          opt.step(result.weights, grads, trainable);
          result.log.push_back({stage, epoch, step, r.parts, r.total, lr});
          summary.mean.flow += r.parts.flow;
          summary.mean.seg += r.parts.seg;
          summary.mean.aff += r.parts.aff;
          summary.mean_total += r.total;
          ++summary.steps;
          ++step;
          prev_desc = r.descriptors;
          prev_clusters = batch.clusters;
          prev_ids = batch.labels.point_object_id;
        }
      }
      if (summary.steps > 0) {
        const double s = static_cast<double>(summary.steps);
        summary.mean.flow /= s;
        summary.mean.seg /= s;
        summary.mean.aff /= s;
        summary.mean_total /= s;
      }
      result.epochs.push_back(summary);
      if (options.on_epoch) options.on_epoch(summary, result.weights);
    }
    if (stage == 1 && options.on_stage1_done) options.on_stage1_done(result.weights);
  }
  return result;
}

std::string log_to_csv(const std::vector<TrainLogRow>& rows) {
  std::ostringstream os;
  os << "stage,epoch,step,L_flow,L_seg,L_aff,L_total,lr\n";
  for (const auto& r : rows) {
    os << r.stage << ',' << r.epoch << ',' << r.step << ',' << core::format_fixed(r.parts.flow, 8)
       << ',' << core::format_fixed(r.parts.seg, 8) << ',' << core::format_fixed(r.parts.aff, 8)
       << ',' << core::format_fixed(r.total, 8) << ',' << core::format_fixed(r.lr, 8) << '\n';
  }
  return os.str();
}

}  // namespace radmot::train
