// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "radmot/backbone/cost_volume.hpp"
#include "radmot/backbone/pfe.hpp"
#include "radmot/common/matrix.hpp"
#include "radmot/core/radar_types.hpp"
#include "radmot/nn/layers.hpp"
#include "radmot/nn/weight_store.hpp"

namespace radmot::motion {

/// E^t: per-point [flow-encoder local features (F_e) | broadcast recurrent vector].
struct FlowEmbedding {
  Matrix per_point;
};

/// S^t: backward flow, one 3-vector (meters per frame interval) per current point.
struct SceneFlow {
  Matrix vectors;
};

/// Recurrent temporal context carried from frame to frame within one sequence.
struct GruState {
  std::vector<double> hidden;
  bool initialized = false;
  std::int64_t last_frame_index = 0;

  void reset() {
    hidden.clear();
    initialized = false;
  }

  /// Call before processing `frame_index`; drops the hidden state after a gap
  /// larger than `max_gap` frames.
  void advance(std::int64_t frame_index, int max_gap) {
    if (initialized && frame_index - last_frame_index > max_gap) reset();
    last_frame_index = frame_index;
  }
};

struct FlowConfig {
  backbone::PfeConfig pfe{{0.5, 1.0, 2.0}, {8, 16, 32}, {32, 64, 128}, {16, 16, 32}, 256};
  std::vector<std::size_t> head_hidden{128, 64};
  /// Hidden state resets when consecutive frame indices differ by more than this.
  int max_gap = 1;

  void validate() const;
  std::size_t embedding_local_width() const { return pfe.local_width(); }        // F_e
  std::size_t hidden_width() const { return static_cast<std::size_t>(pfe.global_dim); }
  std::size_t embedding_width() const { return embedding_local_width() + hidden_width(); }
};

/// Row i = [position_i, v_r, v_c, g_i, h_i]. Without velocity the two RRV
/// columns are omitted.
Matrix build_mixed_features(const core::RadarFrame& frame, const backbone::BackboneFeatures& g,
                            const backbone::CostVolume& h, bool use_velocity = true);

/// Standard gated recurrent cell, hidden width = input width.
///   z = s(W_z x + U_z h + b_z), r = s(W_r x + U_r h + b_r)
///   n = tanh(W_h x + U_h (r * h) + b_h), h' = (1 - z) * h + z * n
class GruCell {
 public:
  struct Cache {
    std::vector<double> x, h, z, r, n, rh;
  };

  GruCell() = default;
  GruCell(std::string prefix, std::size_t input_dim, std::size_t hidden_dim);

  std::vector<nn::TensorSpec> specs() const;
  std::size_t hidden_dim() const { return hidden_; }

  std::vector<double> forward(const std::vector<double>& x, const std::vector<double>& h,
                              const nn::WeightStore& w, Cache* cache = nullptr) const;
  /// Returns dL/dx; writes dL/dh into `dh_prev` when non-null.
  std::vector<double> backward(const Cache& cache, const std::vector<double>& dh_next,
                               const nn::WeightStore& w, nn::GradientStore& g,
                               std::vector<double>* dh_prev) const;

 private:
  std::string prefix_;
  std::size_t input_ = 0;
  std::size_t hidden_ = 0;
};

/// Flow encoder (`flow_pfe.*`), recurrent cell (`gru.*`) and flow predictor
/// (`flow_head.*`) for one mixed-feature width.
class FlowModule {
 public:
  struct Cache {
    backbone::PointFeatureEncoder::Cache pfe;
    GruCell::Cache gru;
    nn::Mlp::Cache head;
    std::size_t n = 0;
  };

  FlowModule() = default;
  FlowModule(FlowConfig cfg, std::size_t mixed_width);

  std::vector<nn::TensorSpec> specs() const;
  const FlowConfig& config() const { return cfg_; }
  std::size_t mixed_width() const { return mixed_; }

  /// Runs the flow encoder on the mixed features (columns 0-2 are positions)
  /// and advances the recurrent state. An uninitialised state counts as zero.
  FlowEmbedding embed(const Matrix& mixed, GruState& state, const nn::WeightStore& w,
                      Cache* cache = nullptr) const;

  SceneFlow predict(const FlowEmbedding& e, const nn::WeightStore& w,
                    Cache* cache = nullptr) const;

  /// Back-propagates dL/dS and dL/dE (either may be empty) to the module's
  /// tensors; returns dL/d(mixed features) for columns 3 onward. The previous
  /// recurrent state is treated as a constant.
  Matrix backward(const Cache& cache, const Matrix& d_flow, const Matrix& d_embedding,
                  const nn::WeightStore& w, nn::GradientStore& g) const;

 private:
  FlowConfig cfg_;
  std::size_t mixed_ = 0;
  backbone::PointFeatureEncoder pfe_;
  GruCell gru_;
  nn::Mlp head_;
};

/// Free-function forms.
FlowEmbedding flow_embed(const Matrix& mixed, const FlowConfig& cfg, GruState& gru,
                         const nn::WeightStore& weights);
SceneFlow predict_flow(const FlowEmbedding& embedding, const FlowConfig& cfg,
                       const nn::WeightStore& weights);

}  // namespace radmot::motion
