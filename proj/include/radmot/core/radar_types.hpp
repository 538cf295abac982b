// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "radmot/common/matrix.hpp"

namespace radmot::core {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rigid transform, target <- source. Frame poses map sensor -> world.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Vec3 rotate(const Vec3& v) const { return rotation * v; }
  RigidTransform inverse() const;
  RigidTransform operator*(const RigidTransform& rhs) const;

  /// Row-major 3x4 [R | t].
  std::array<double, 12> to_row_major() const;
  static RigidTransform from_row_major(std::span<const double, 12> values);
  static RigidTransform from_yaw(double yaw, const Vec3& translation);

  /// Orthonormal with determinant +1 within `tol`.
  bool is_rigid(double tol = 1e-6) const;
};

struct RadarPoint {
  Vec3 position = Vec3::Zero();   // meters, sensor frame
  double rrv = 0.0;               // measured relative radial velocity, m/s
  double rrv_compensated = 0.0;   // ego-motion compensated RRV, m/s

  bool is_finite() const;
};

struct RadarFrame {
  std::vector<RadarPoint> points;
  RigidTransform ego_pose;  // world <- sensor
  double timestamp = 0.0;
  std::int64_t frame_index = 0;

  std::size_t size() const noexcept { return points.size(); }
  /// N x 3 positions.
  Matrix positions() const;
};

/// Oriented box in the sensor frame of its own frame_index.
struct BoxAnnotation {
  Vec3 center = Vec3::Zero();
  Vec3 dims = Vec3::Ones();  // length, width, height
  double yaw = 0.0;
  int track_id = 0;
  std::int64_t frame_index = 0;

  /// sensor <- box
  RigidTransform pose() const { return RigidTransform::from_yaw(yaw, center); }
  bool contains(const Vec3& p) const;
};

struct SequenceMeta {
  double fps = 10.0;
  std::string sensor_id = "radar";
};

struct SequenceFrame {
  RadarFrame frame;
  std::vector<BoxAnnotation> boxes;
};

struct Sequence {
  SequenceMeta meta;
  std::vector<SequenceFrame> frames;
};

/// Throws ValidationError on non-finite points or a non-rigid pose.
void validate_frame(const RadarFrame& frame);
/// Frame checks plus strictly increasing frame indices, positive box dims and
/// unique (track_id, frame_index).
void validate_sequence(const Sequence& seq);

}  // namespace radmot::core
