// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "radmot/common/matrix.hpp"
#include "radmot/core/radar_types.hpp"

namespace radmot::core {

/// Scene recipe for the synthetic generator. Objects are rigid point clusters
/// travelling at constant velocity along parallel lanes; static clutter stays
/// fixed in the world; the ego sensor follows a constant-velocity path.
struct SyntheticSceneConfig {
  int n_objects = 3;
  int points_per_object = 8;
  int n_static = 60;
  double speed_min = 3.0;  // m/s
  double speed_max = 8.0;
  double noise_sigma = 0.02;      // position noise, meters (clamped at 3 sigma)
  double rrv_noise_sigma = 0.1;   // m/s
  double fps = 10.0;
  int n_frames = 10;
  std::uint64_t rng_seed = 0;
  Vec3 ego_velocity = Vec3::Zero();  // world frame, m/s
  double ego_yaw = 0.0;
  double lane_spacing = 6.0;         // meters between lane centre lines
  bool alternate_directions = false; // object k moves in -x when k is odd
  double static_clearance = 2.0;     // min lateral distance of clutter from any lane

  void validate() const;
};

/// Ground truth for one frame, aligned with that frame's point order.
struct FrameTruth {
  Matrix flow;                        // N x 3 backward flow
  std::vector<std::uint8_t> motion_mask;
  std::vector<int> object_id;         // -1 for static clutter
};

struct SyntheticSequence {
  Sequence sequence;
  std::vector<FrameTruth> truth;
};

SyntheticSequence generate_synthetic_sequence(const SyntheticSceneConfig& cfg);

}  // namespace radmot::core
