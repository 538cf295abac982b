// SPDX-License-Identifier: Apache-2.0

#include "radmot/core/radar_types.hpp"

#include <cmath>
#include <set>
#include <string>
#include <utility>

#include "radmot/common/errors.hpp"

namespace radmot::core {

RigidTransform RigidTransform::inverse() const {
  RigidTransform out;
  out.rotation = rotation.transpose();
  out.translation = -(out.rotation * translation);
  return out;
}

RigidTransform RigidTransform::operator*(const RigidTransform& rhs) const {
  RigidTransform out;
  out.rotation = rotation * rhs.rotation;
  out.translation = rotation * rhs.translation + translation;
  return out;
}

std::array<double, 12> RigidTransform::to_row_major() const {
  std::array<double, 12> v{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) v[r * 4 + c] = rotation(r, c);
    v[r * 4 + 3] = translation(r);
  }
  return v;
}

RigidTransform RigidTransform::from_row_major(std::span<const double, 12> values) {
  RigidTransform out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out.rotation(r, c) = values[r * 4 + c];
    out.translation(r) = values[r * 4 + 3];
  }
  return out;
}

RigidTransform RigidTransform::from_yaw(double yaw, const Vec3& translation) {
  RigidTransform out;
  out.rotation = Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
  out.translation = translation;
  return out;
}

bool RigidTransform::is_rigid(double tol) const {
  if (!rotation.allFinite() || !translation.allFinite()) return false;
  const Mat3 gram = rotation.transpose() * rotation;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

bool RadarPoint::is_finite() const {
  return position.allFinite() && std::isfinite(rrv) && std::isfinite(rrv_compensated);
}

Matrix RadarFrame::positions() const {
  Matrix m(points.size(), 3);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (int k = 0; k < 3; ++k) m(i, k) = points[i].position(k);
  }
  return m;
}

bool BoxAnnotation::contains(const Vec3& p) const {
  const Vec3 local = pose().inverse().apply(p);
  return std::abs(local.x()) <= 0.5 * dims.x() && std::abs(local.y()) <= 0.5 * dims.y() &&
         std::abs(local.z()) <= 0.5 * dims.z();
}

void validate_frame(const RadarFrame& frame) {
  for (std::size_t i = 0; i < frame.points.size(); ++i) {
    if (!frame.points[i].is_finite()) {
      throw ValidationError("frame " + std::to_string(frame.frame_index) + ": point " +
                            std::to_string(i) + " has a non-finite field");
    }
  }
  if (!frame.ego_pose.is_rigid()) {
    throw ValidationError("frame " + std::to_string(frame.frame_index) +
                          ": ego pose is not a rigid transform");
  }
}

void validate_sequence(const Sequence& seq) {
  std::set<std::pair<int, std::int64_t>> seen;
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    const auto& f = seq.frames[t];
    validate_frame(f.frame);
    if (t > 0 && f.frame.frame_index <= seq.frames[t - 1].frame.frame_index) {
      throw ValidationError("frame indices must strictly increase (at frame " +
                            std::to_string(f.frame.frame_index) + ")");
    }
    for (const auto& b : f.boxes) {
      if (!(b.dims.array() > 0.0).all() || !b.center.allFinite() || !std::isfinite(b.yaw)) {
        throw ValidationError("invalid box for track " + std::to_string(b.track_id));
      }
      if (!seen.emplace(b.track_id, b.frame_index).second) {
        throw ValidationError("duplicate annotation (track " + std::to_string(b.track_id) +
                              ", frame " + std::to_string(b.frame_index) + ")");
      }
    }
  }
}

}  // namespace radmot::core
