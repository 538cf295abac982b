// SPDX-License-Identifier: Apache-2.0

#include "radmot/core/ego_motion.hpp"

namespace radmot::core {

CompensationResult compensate_rrv(const RadarFrame& frame, const Vec3& ego_velocity) {
  CompensationResult out{frame, 0};
  for (auto& p : out.frame.points) {
    const double r = p.position.norm();
    if (r < 1e-9) {
      p.rrv_compensated = p.rrv;
      ++out.origin_points;
      continue;
    }
    p.rrv_compensated = p.rrv + p.position.dot(ego_velocity) / r;
  }
  return out;
}

Vec3 ego_flow(const RigidTransform& pose_t, const RigidTransform& pose_prev, const Vec3& p) {
  return (pose_prev.inverse() * pose_t).apply(p) - p;
}

Vec3 ego_velocity_in_sensor(const RigidTransform& pose_t, const RigidTransform& pose_prev,
                            double dt) {
  const Vec3 world_velocity = (pose_t.translation - pose_prev.translation) / dt;
  return pose_t.rotation.transpose() * world_velocity;
}

}  // namespace radmot::core
