// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "radmot/common/matrix.hpp"
#include "radmot/core/radar_types.hpp"
#include "radmot/nn/weight_store.hpp"

namespace radmot::backbone {

struct PfeConfig {
  std::array<double, 3> sa_radii{0.5, 1.0, 2.0};
  std::array<int, 3> sa_neighbors{8, 16, 32};
  std::array<int, 3> sa_channels{32, 64, 128};
  std::array<int, 3> fp_channels{64, 64, 64};
  int global_dim = 256;

  void validate() const;
  std::size_t local_width() const;
  std::size_t output_width() const { return local_width() + static_cast<std::size_t>(global_dim); }
};

/// G^t: per-point [propagated multi-scale local features | broadcast global vector].
struct BackboneFeatures {
  Matrix per_point;
  std::vector<double> global_vec;
};

/// Point feature encoder: three parallel set-abstraction scales (every point is
/// a centroid), one propagation MLP per scale, and a max-pooled global vector.
///
/// Tensors under `<prefix>`:
///   sa<s>.w_pos [C_s x 3], sa<s>.w_feat [C_s x F_in], sa<s>.b [C_s]
///   fp<s>.w [fp_s x C_s], fp<s>.b [fp_s]
///   global.w [G x sum(fp)], global.b [G]
class PointFeatureEncoder {
 public:
  struct Cache {
    Matrix positions;
    Matrix extra;
    std::array<std::vector<std::int32_t>, 3> neighbours;
    std::array<Matrix, 3> sa_pre;                       // N x C_s pre-activation
    std::array<std::vector<std::int32_t>, 3> sa_arg;    // N x C_s winning point index
    std::array<Matrix, 3> sa_out;                       // leaky(sa_pre)
    std::array<Matrix, 3> fp_pre;
    Matrix local;                                       // N x sum(fp)
    Matrix pool_pre;                                    // N x G
    std::vector<std::int32_t> pool_arg;                 // G
  };

  struct Output {
    Matrix local;                 // N x sum(fp)
    Matrix pre_pool;              // N x G, after activation
    std::vector<double> global;   // G
  };

  PointFeatureEncoder() = default;
  PointFeatureEncoder(std::string prefix, PfeConfig cfg, std::size_t extra_features);

  std::vector<nn::TensorSpec> specs() const;
  const PfeConfig& config() const { return cfg_; }
  std::size_t extra_features() const { return extra_; }

  /// `extra` may have zero columns. N = 0 yields empty outputs and a zero global vector.
  Output forward(const Matrix& positions, const Matrix& extra, const nn::WeightStore& w,
                 Cache* cache = nullptr) const;

  /// Accumulates parameter gradients; returns dL/d(extra) when requested.
  Matrix backward(const Cache& cache, const Matrix& d_local, const std::vector<double>& d_global,
                  const nn::WeightStore& w, nn::GradientStore& g, bool need_extra_grad) const;

 private:
  std::string name(int scale, const char* what) const;

  std::string prefix_;
  PfeConfig cfg_;
  std::size_t extra_ = 0;
};

/// Backbone encoding of a frame. Extra features are [v_r, v_c] when
/// `use_velocity` is set, otherwise none; `extra_features` overrides both.
BackboneFeatures pfe_forward(const core::RadarFrame& frame,
                             const std::optional<Matrix>& extra_features, const PfeConfig& cfg,
                             const nn::WeightStore& weights, bool use_velocity = true,
                             const std::string& prefix = "pfe");

/// Broadcast-concatenates the global vector onto every row of `local`.
Matrix attach_global(const Matrix& local, const std::vector<double>& global);

/// N x 2 [v_r, v_c].
Matrix velocity_features(const core::RadarFrame& frame);

}  // namespace radmot::backbone
