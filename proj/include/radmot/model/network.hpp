// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "radmot/assoc/associator.hpp"
#include "radmot/backbone/cost_volume.hpp"
#include "radmot/backbone/pfe.hpp"
#include "radmot/core/radar_types.hpp"
#include "radmot/detect/detector.hpp"
#include "radmot/motion/motion_flow.hpp"
#include "radmot/nn/layers.hpp"
#include "radmot/nn/weight_store.hpp"

namespace radmot::model {

/// Architecture of every learned stage plus the two ablation switches.
struct ModelConfig {
  backbone::PfeConfig pfe;
  backbone::CostVolumeConfig cost;
  motion::FlowConfig flow;
  detect::DetectConfig detect;
  assoc::AssocConfig assoc;
  bool use_velocity = true;
  bool use_motion_module = true;

  void validate() const;
  /// Architecture description stored alongside the weights.
  nlohmann::json manifest() const;
};

/// Forward results for one (previous, current) frame pair.
struct PairOutput {
  backbone::BackboneFeatures features;  // G of the current frame
  backbone::CostVolume cost;            // H
  std::vector<double> logits;
  detect::MotionScores scores;
  motion::FlowEmbedding embedding;      // E (backbone G without the motion module)
  motion::SceneFlow flow;               // S (zeros without the motion module)
};

struct PairCache {
  backbone::PointFeatureEncoder::Cache pfe_cur, pfe_prev;
  backbone::CostVolumeLayer::Cache cost;
  nn::Mlp::Cache cls;
  std::vector<double> scores;
  motion::FlowModule::Cache flow;
  bool ran_flow = false;
};

/// Gradients arriving at the pair outputs. Empty members are treated as zero.
struct PairGrads {
  std::vector<double> d_scores;
  Matrix d_flow;
  Matrix d_embedding;
};

/// Cached state of one affinity evaluation.
struct AssocCache {
  std::vector<std::vector<int>> argmax;
  assoc::AffinityNet::Cache affinity;
  assoc::SinkhornTrace sinkhorn;
};

class Network {
 public:
  explicit Network(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }
  std::vector<nn::TensorSpec> specs() const;
  /// Tensors updated during the segmentation-only stage.
  static bool is_stage1_tensor(const std::string& name);

  nn::WeightStore init_weights(std::uint64_t seed) const;
  /// Throws ValidationError when the tensors or the architecture manifest differ.
  void check_weights(const nn::WeightStore& w) const;

  std::size_t embedding_width() const;

  Matrix extra_features(const core::RadarFrame& frame) const;

  /// Runs backbone (both frames), cost volume, motion classifier and, when
  /// `run_flow` is set and the motion module is enabled, the flow module.
  /// `gru` is advanced only when the flow module runs.
  PairOutput forward_pair(const core::RadarFrame& cur, const core::RadarFrame& prev,
                          motion::GruState& gru, const nn::WeightStore& w, bool run_flow = true,
                          PairCache* cache = nullptr) const;

  void backward_pair(const PairCache& cache, const PairGrads& grads, const nn::WeightStore& w,
                     nn::GradientStore& g) const;

  std::vector<assoc::Descriptor> descriptors(const detect::DetectionSet& dets,
                                             const core::RadarFrame& frame,
                                             std::vector<std::vector<int>>* argmax) const;

  /// Sinkhorn-normalised affinity of detections against tracks.
  Matrix associate(const std::vector<assoc::Descriptor>& dets,
                   const std::vector<assoc::Descriptor>& tracks, const nn::WeightStore& w,
                   AssocCache* cache = nullptr) const;

  /// Routes dL/d(normalised affinity) through Sinkhorn, the affinity network
  /// and descriptor pooling into per-point flow and embedding gradients.
  void associate_backward(const AssocCache& cache, const Matrix& d_norm, const nn::WeightStore& w,
                          nn::GradientStore& g, Matrix& d_flow, Matrix& d_embedding) const;

 private:
  ModelConfig cfg_;
  backbone::PointFeatureEncoder pfe_;
  backbone::CostVolumeLayer cost_;
  detect::MotionClassifier cls_;
  motion::FlowModule flow_;
  assoc::AffinityNet affinity_;
};

}  // namespace radmot::model
