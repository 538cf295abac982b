// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "radmot/core/radar_types.hpp"

namespace radmot::core {

struct CompensationResult {
  RadarFrame frame;
  /// Points closer than 1e-9 m to the sensor origin; their rrv_compensated is copied from rrv.
  std::size_t origin_points = 0;
};

/// rrv_compensated = rrv + dot(unit(position), ego_velocity), ego_velocity in the sensor frame.
CompensationResult compensate_rrv(const RadarFrame& frame, const Vec3& ego_velocity);

/// Backward flow a static world point would show: position in frame t-1 sensor
/// coordinates minus position in frame t sensor coordinates.
Vec3 ego_flow(const RigidTransform& pose_t, const RigidTransform& pose_prev, const Vec3& p);

/// Ego velocity in the sensor frame of `pose_t`, from two consecutive poses.
Vec3 ego_velocity_in_sensor(const RigidTransform& pose_t, const RigidTransform& pose_prev,
                            double dt);

}  // namespace radmot::core
