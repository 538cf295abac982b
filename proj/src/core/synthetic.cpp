// SPDX-License-Identifier: Apache-2.0

#include "radmot/core/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "radmot/common/errors.hpp"

namespace radmot::core {

void SyntheticSceneConfig::validate() const {
  if (n_objects < 0 || points_per_object < 0 || n_static < 0 || n_frames < 0) {
    throw ValidationError("synthetic config: counts must be >= 0");
  }
  if (noise_sigma < 0.0 || rrv_noise_sigma < 0.0) {
    throw ValidationError("synthetic config: noise sigmas must be >= 0");
  }
  if (!(fps > 0.0)) throw ValidationError("synthetic config: fps must be > 0");
  if (speed_min < 0.0 || speed_max < speed_min) {
    throw ValidationError("synthetic config: invalid speed range");
  }
}

namespace {

struct ObjectModel {
  Vec3 start;     // world centre at t = 0
  Vec3 velocity;  // world, m/s
  Vec3 dims;
  std::vector<Vec3> offsets;  // body-frame point offsets (body axes = world axes)
};

double clamped_normal(std::mt19937_64& rng, double sigma) {
  if (sigma == 0.0) return 0.0;
  std::normal_distribution<double> n(0.0, sigma);
  return std::clamp(n(rng), -3.0 * sigma, 3.0 * sigma);
}

}  // namespace

SyntheticSequence generate_synthetic_sequence(const SyntheticSceneConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  const double dt = 1.0 / cfg.fps;
  const Mat3 ego_rot = RigidTransform::from_yaw(cfg.ego_yaw, Vec3::Zero()).rotation;

  std::vector<double> lanes;
  std::vector<ObjectModel> objects;
  for (int k = 0; k < cfg.n_objects; ++k) {
    const double lane_y = (k - 0.5 * (cfg.n_objects - 1)) * cfg.lane_spacing;
    lanes.push_back(lane_y);
    ObjectModel obj;
    double dir = 1.0;
    if (cfg.alternate_directions) {
      dir = (k % 2) ? -1.0 : 1.0;
    } else {
      dir = unit(rng) < 0.5 ? -1.0 : 1.0;
    }
    const double speed = uniform(cfg.speed_min, cfg.speed_max);
    obj.start = Vec3(uniform(12.0, 28.0), lane_y, 0.6);
    obj.velocity = Vec3(dir * speed, 0.0, 0.0);
    obj.dims = Vec3(uniform(0.6, 1.0), uniform(0.4, 0.7), uniform(0.3, 0.6));
    for (int j = 0; j < cfg.points_per_object; ++j) {
      obj.offsets.emplace_back(uniform(-0.45, 0.45) * obj.dims.x(),
                               uniform(-0.45, 0.45) * obj.dims.y(),
                               uniform(-0.45, 0.45) * obj.dims.z());
    }
    objects.push_back(std::move(obj));
  }

  const double half_width =
      0.5 * std::max(0, cfg.n_objects - 1) * cfg.lane_spacing + cfg.static_clearance + 8.0;
  std::vector<Vec3> statics;
  while (static_cast<int>(statics.size()) < cfg.n_static) {
    const Vec3 p(uniform(2.0, 50.0), uniform(-half_width, half_width), uniform(-0.5, 2.0));
    const bool near_lane = std::any_of(lanes.begin(), lanes.end(), [&](double y) {
      return std::abs(p.y() - y) < cfg.static_clearance;
    });
    if (!near_lane) statics.push_back(p);
  }

  auto ego_pose_at = [&](double t) {
    RigidTransform pose;
    pose.rotation = ego_rot;
    pose.translation = cfg.ego_velocity * t;
    return pose;
  };

  const Vec3 ego_vel_sensor = ego_rot.transpose() * cfg.ego_velocity;
  const double box_margin = 2.0 * (3.0 * cfg.noise_sigma + 0.05);

  SyntheticSequence out;
  out.sequence.meta.fps = cfg.fps;
  out.sequence.meta.sensor_id = "synthetic";

  for (int f = 0; f < cfg.n_frames; ++f) {
    const double t = f * dt;
    const RigidTransform pose = ego_pose_at(t);
    const RigidTransform pose_prev = ego_pose_at(t - dt);
    const RigidTransform to_sensor = pose.inverse();
    const RigidTransform to_sensor_prev = pose_prev.inverse();

    struct Sample {
      Vec3 world;
      Vec3 world_prev;
      Vec3 velocity;
      int object;
    };
    std::vector<Sample> samples;
    for (int k = 0; k < cfg.n_objects; ++k) {
      const auto& obj = objects[k];
      const Vec3 c = obj.start + obj.velocity * t;
      for (const auto& o : obj.offsets) {
        samples.push_back({c + o, c + o - obj.velocity * dt, obj.velocity, k});
      }
    }
    for (const auto& s : statics) samples.push_back({s, s, Vec3::Zero(), -1});

    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    SequenceFrame sf;
    sf.frame.frame_index = f;
    sf.frame.timestamp = t;
    sf.frame.ego_pose = pose;
    FrameTruth truth;
    truth.flow = Matrix(samples.size(), 3);
    truth.motion_mask.assign(samples.size(), 0);
    truth.object_id.assign(samples.size(), -1);

    for (std::size_t i = 0; i < order.size(); ++i) {
      const Sample& s = samples[order[i]];
      const Vec3 p_true = to_sensor.apply(s.world);
      const Vec3 p_prev = to_sensor_prev.apply(s.world_prev);
      const Vec3 flow = p_prev - p_true;

      RadarPoint rp;
      rp.position = p_true + Vec3(clamped_normal(rng, cfg.noise_sigma),
                                  clamped_normal(rng, cfg.noise_sigma),
                                  clamped_normal(rng, cfg.noise_sigma));
      const Vec3 rel_velocity = pose.rotation.transpose() * (s.velocity - cfg.ego_velocity);
      const double r_true = p_true.norm();
      const double radial = r_true > 1e-9 ? p_true.dot(rel_velocity) / r_true : 0.0;
      rp.rrv = radial + clamped_normal(rng, cfg.rrv_noise_sigma);
      const double r_meas = rp.position.norm();
      rp.rrv_compensated =
          r_meas > 1e-9 ? rp.rrv + rp.position.dot(ego_vel_sensor) / r_meas : rp.rrv;
      sf.frame.points.push_back(rp);

      for (int k = 0; k < 3; ++k) truth.flow(i, k) = flow(k);
      truth.object_id[i] = s.object;
      truth.motion_mask[i] = (s.object >= 0 && s.velocity.norm() > 0.0) ? 1 : 0;
    }

    for (int k = 0; k < cfg.n_objects; ++k) {
      const auto& obj = objects[k];
      BoxAnnotation b;
      b.center = to_sensor.apply(obj.start + obj.velocity * t);
      b.dims = obj.dims + Vec3::Constant(box_margin);
      b.yaw = -cfg.ego_yaw;
      b.track_id = k;
      b.frame_index = f;
      sf.boxes.push_back(b);
    }
    out.sequence.frames.push_back(std::move(sf));
    out.truth.push_back(std::move(truth));
  }
  return out;
}

}  // namespace radmot::core
