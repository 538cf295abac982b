// SPDX-License-Identifier: Apache-2.0

#include "radmot/train/toy_problem.hpp"

namespace radmot::train {

core::SyntheticSequence toy_scene(std::uint64_t seed) {
  core::SyntheticSceneConfig c;
  c.n_objects = 2;
  c.points_per_object = 4;
  c.n_static = 8;
  c.n_frames = 3;
  c.rng_seed = seed;
  c.ego_velocity = core::Vec3(2.0, 0.0, 0.0);
  return core::generate_synthetic_sequence(c);
}

ToyProblem::ToyProblem(const model::ModelConfig& cfg, const nn::WeightStore& weights,
                       std::uint64_t scene_seed, LossConfig loss)
    : scene_(toy_scene(scene_seed)), net_(std::make_unique<model::Network>(cfg)), loss_(loss) {
  const auto& f = scene_.sequence.frames;
  PairBatch first;
  first.cur = &f[1].frame;
  first.prev = &f[0].frame;
  first.labels = label_points(f[1].frame, f[0].frame, f[1].boxes, f[0].boxes,
                              loss_.motion_label_threshold);
  first.clusters = teacher_clusters(f[1].frame, first.labels, cfg.detect);
  const auto r = pair_objective(*net_, weights, first, gru_, loss_, 2, nullptr);

  batch_.cur = &f[2].frame;
  batch_.prev = &f[1].frame;
  batch_.labels = label_points(f[2].frame, f[1].frame, f[2].boxes, f[1].boxes,
                               loss_.motion_label_threshold);
  batch_.clusters = teacher_clusters(f[2].frame, batch_.labels, cfg.detect);
  batch_.track_descriptors = r.descriptors;
  batch_.affinity_labels = label_affinity(batch_.clusters, batch_.labels.point_object_id,
                                          first.clusters, first.labels.point_object_id);
}

LossFn ToyProblem::loss_fn(int stage) const {
  return [this, stage](const nn::WeightStore& w, nn::GradientStore* g) {
    motion::GruState state = gru_;
    return pair_objective(*net_, w, batch_, state, loss_, stage, g).total;
  };
}

}  // namespace radmot::train
