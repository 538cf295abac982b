// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "radmot/backbone/pfe.hpp"
#include "radmot/common/matrix.hpp"
#include "radmot/nn/weight_store.hpp"

namespace radmot::backbone {

struct CostVolumeConfig {
  int k_neighbors = 8;
  int out_dim = 128;  // F_h
  /// Adds the current point's own feature to every pair vector so the cost
  /// volume carries the point's velocity encoding. Off gives the pure
  /// [feature difference, relative position] pair.
  bool include_current_features = true;

  void validate() const;
};

/// H^t, one row per current-frame point.
struct CostVolume {
  Matrix per_point;
};

/// Patch-to-point cost volume. For current point i and each of its k nearest
/// previous-frame points j, the pair vector
///   [g_j - g_i, (g_i), x_j - x_i]
/// passes through a shared two-layer MLP; pair outputs are summed with
/// normalised inverse-distance weights.
///
/// Tensors under `cost`: layer0.w_diff [F_h x F_g], layer0.w_cur [F_h x F_g]
/// (only with include_current_features), layer0.w_pos [F_h x 3], layer0.b,
/// layer1.w [F_h x F_h], layer1.b.
class CostVolumeLayer {
 public:
  struct Cache {
    Matrix cur_pos, prev_pos, cur_feat, prev_feat;
    int k = 0;
    std::vector<std::int32_t> nbr;   // N x k
    std::vector<double> weight;      // N x k
    Matrix pre1;                     // (N*k) x F_h
    Matrix h1;                       // (N*k) x F_h
    Matrix pre2;                     // (N*k) x F_h
  };

  CostVolumeLayer() = default;
  CostVolumeLayer(CostVolumeConfig cfg, std::size_t feature_dim, std::string prefix = "cost");

  std::vector<nn::TensorSpec> specs() const;
  const CostVolumeConfig& config() const { return cfg_; }

  /// Empty previous frame yields a zero-filled N x F_h volume.
  Matrix forward(const Matrix& cur_pos, const Matrix& cur_feat, const Matrix& prev_pos,
                 const Matrix& prev_feat, const nn::WeightStore& w, Cache* cache = nullptr) const;

  /// Accumulates parameter gradients and writes feature gradients for both frames.
  void backward(const Cache& cache, const Matrix& d_out, const nn::WeightStore& w,
                nn::GradientStore& g, Matrix* d_cur_feat, Matrix* d_prev_feat) const;

 private:
  CostVolumeConfig cfg_;
  std::size_t feat_ = 0;
  std::string prefix_;
};

/// Free-function form of the forward pass.
CostVolume cost_volume(const BackboneFeatures& cur, const Matrix& cur_positions,
                       const BackboneFeatures& prev, const Matrix& prev_positions,
                       const CostVolumeConfig& cfg, const nn::WeightStore& weights);

}  // namespace radmot::backbone
