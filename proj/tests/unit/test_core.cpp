// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "radmot/common/errors.hpp"
#include "radmot/core/ego_motion.hpp"
#include "radmot/core/sequence_io.hpp"
#include "radmot/core/synthetic.hpp"
#include "test_util.hpp"

using namespace radmot;
using namespace radmot::core;

namespace {

RadarFrame single_point_frame(const Vec3& p, double rrv) {
  RadarFrame f;
  RadarPoint rp;
  rp.position = p;
  rp.rrv = rp.rrv_compensated = rrv;
  f.points.push_back(rp);
  return f;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("compensate_rrv examples") {
  auto r = compensate_rrv(single_point_frame({10, 0, 0}, -5.0), Vec3(5, 0, 0));
  CHECK(r.frame.points[0].rrv_compensated == doctest::Approx(0.0).epsilon(1e-12));

  r = compensate_rrv(single_point_frame({3, 4, 1}, 1.25), Vec3::Zero());
  CHECK(r.frame.points[0].rrv_compensated == 1.25);

  r = compensate_rrv(single_point_frame({0, 10, 0}, -2.0), Vec3(5, 0, 0));
  CHECK(r.frame.points[0].rrv_compensated == -2.0);

  r = compensate_rrv(single_point_frame({0, 0, 0}, 0.7), Vec3(5, 0, 0));
  CHECK(r.origin_points == 1);
  CHECK(r.frame.points[0].rrv_compensated == 0.7);
}

TEST_CASE("compensate_rrv with v then -v restores the compensated value") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-20, 20);
  for (int trial = 0; trial < 200; ++trial) {
    RadarFrame f = single_point_frame({u(rng), u(rng), u(rng)}, u(rng));
    f.points[0].rrv_compensated = u(rng);
    const Vec3 v(u(rng), u(rng), u(rng));
    auto once = compensate_rrv(f, v).frame;
    // Feed the compensated value back as the measurement, then undo.
    once.points[0].rrv = once.points[0].rrv_compensated;
    auto back = compensate_rrv(once, -v).frame;
    CHECK(std::abs(back.points[0].rrv_compensated - f.points[0].rrv) <= 1e-12);
  }
}

TEST_CASE("rigid transform helpers") {
  const auto a = RigidTransform::from_yaw(0.3, Vec3(1, 2, 3));
  CHECK(a.is_rigid());
  const auto id = a * a.inverse();
  CHECK((id.rotation - Mat3::Identity()).norm() < 1e-12);
  CHECK(id.translation.norm() < 1e-12);
  const auto rm = a.to_row_major();
  const auto b = RigidTransform::from_row_major(std::span<const double, 12>(rm));
  CHECK((b.rotation - a.rotation).norm() == 0.0);
  RigidTransform bad;
  bad.rotation(0, 0) = 2.0;
  CHECK_FALSE(bad.is_rigid());
}

TEST_CASE("synthetic generator: static scene has zero flow and mask") {
  SyntheticSceneConfig cfg;
  cfg.n_objects = 0;
  cfg.n_static = 50;
  cfg.n_frames = 3;
  const auto s = generate_synthetic_sequence(cfg);
  REQUIRE(s.truth.size() == 3);
  for (const auto& t : s.truth) {
    CHECK(t.flow.rows() == 50);
    for (double v : t.flow.storage()) CHECK(v == 0.0);
    for (auto m : t.motion_mask) CHECK(m == 0);
  }
}

TEST_CASE("synthetic generator: one object at 1 m/s gives -0.1 m backward flow") {
  SyntheticSceneConfig cfg;
  cfg.n_objects = 1;
  cfg.n_static = 5;
  cfg.speed_min = cfg.speed_max = 1.0;
  cfg.alternate_directions = true;  // object 0 moves along +x
  cfg.n_frames = 4;
  const auto s = generate_synthetic_sequence(cfg);
  for (const auto& t : s.truth) {
    for (std::size_t i = 0; i < t.flow.rows(); ++i) {
      if (t.object_id[i] < 0) continue;
      CHECK(t.flow(i, 0) == doctest::Approx(-0.1).epsilon(1e-12));
      CHECK(std::abs(t.flow(i, 1)) < 1e-12);
      CHECK(std::abs(t.flow(i, 2)) < 1e-12);
      CHECK(t.motion_mask[i] == 1);
    }
  }
}

TEST_CASE("synthetic generator: moving flow magnitude equals speed / fps") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SyntheticSceneConfig cfg;
    cfg.rng_seed = seed;
    const auto s = generate_synthetic_sequence(cfg);
    for (const auto& t : s.truth) {
      for (std::size_t i = 0; i < t.flow.rows(); ++i) {
        if (!t.motion_mask[i]) continue;
        const double mag = std::sqrt(t.flow(i, 0) * t.flow(i, 0) + t.flow(i, 1) * t.flow(i, 1) +
                                     t.flow(i, 2) * t.flow(i, 2));
        CHECK(mag * cfg.fps >= cfg.speed_min - 1e-9);
        CHECK(mag * cfg.fps <= cfg.speed_max + 1e-9);
      }
    }
  }
}

TEST_CASE("synthetic generator: deterministic per seed") {
  SyntheticSceneConfig cfg;
  cfg.rng_seed = 11;
  cfg.ego_velocity = Vec3(4, 0.5, 0);
  const auto a = generate_synthetic_sequence(cfg);
  const auto b = generate_synthetic_sequence(cfg);
  REQUIRE(a.sequence.frames.size() == b.sequence.frames.size());
  for (std::size_t f = 0; f < a.sequence.frames.size(); ++f) {
    const auto& pa = a.sequence.frames[f].frame.points;
    const auto& pb = b.sequence.frames[f].frame.points;
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
      CHECK(pa[i].position == pb[i].position);
      CHECK(pa[i].rrv == pb[i].rrv);
    }
    CHECK(a.truth[f].flow == b.truth[f].flow);
  }
}

TEST_CASE("synthetic generator: static points under ego motion follow the ego flow") {
  SyntheticSceneConfig cfg;
  cfg.n_objects = 0;
  cfg.noise_sigma = 0.0;
  cfg.ego_velocity = Vec3(5, 0, 0);
  cfg.ego_yaw = 0.2;
  const auto s = generate_synthetic_sequence(cfg);
  const auto& f1 = s.sequence.frames[1].frame;
  const auto& f0 = s.sequence.frames[0].frame;
  for (std::size_t i = 0; i < f1.size(); ++i) {
    const Vec3 expect = ego_flow(f1.ego_pose, f0.ego_pose, f1.points[i].position);
    for (int d = 0; d < 3; ++d) CHECK(s.truth[1].flow(i, d) == doctest::Approx(expect[d]).epsilon(1e-9));
  }
  // Compensated RRV of a noiseless static world point is ~0 up to rrv noise.
  for (const auto& p : f1.points) CHECK(std::abs(p.rrv_compensated) < 0.5);
}

TEST_CASE("sequence io round trip reproduces point files byte for byte") {
  test::TempDir dir("seqio");
  SyntheticSceneConfig cfg;
  cfg.n_frames = 3;
  cfg.ego_velocity = Vec3(3, 0, 0);
  const auto s = generate_synthetic_sequence(cfg);
  save_sequence(s.sequence, dir.path() / "a");
  const Sequence loaded = load_sequence(dir.path() / "a");
  REQUIRE(loaded.frames.size() == 3);
  CHECK(loaded.frames[1].boxes.size() == s.sequence.frames[1].boxes.size());
  save_sequence(loaded, dir.path() / "b");
  for (int f = 0; f < 3; ++f) {
    const auto name = "frames/" + frame_file_name(f);
    CHECK(slurp(dir.path() / "a" / name) == slurp(dir.path() / "b" / name));
  }
  CHECK(slurp(dir.path() / "a" / "poses.csv") == slurp(dir.path() / "b" / "poses.csv"));
}

TEST_CASE("load_sequence edge cases") {
  test::TempDir dir("seqio_edge");
  std::filesystem::create_directories(dir.path() / "empty");
  CHECK(load_sequence(dir.path() / "empty").frames.empty());

  const auto two = dir.path() / "two";
  std::filesystem::create_directories(two / "frames");
  std::ofstream(two / "frames" / frame_file_name(0)) << "1.000000,2.000000,0.000000,0.500000,0.000000\n";
  std::ofstream(two / "frames" / frame_file_name(1)) << "1.100000,2.000000,0.000000,0.500000,0.000000\n";
  {
    std::ofstream poses(two / "poses.csv");
    for (int i = 0; i < 2; ++i) poses << "1,0,0,0,0,1,0,0,0,0,1,0\n";
  }
  CHECK(load_sequence(two).frames.size() == 2);

  std::ofstream(two / "frames" / frame_file_name(1)) << "nan,2.000000,0.000000,0.500000,0.000000\n";
  CHECK_THROWS_AS(load_sequence(two), ValidationError);

  std::ofstream(two / "frames" / frame_file_name(1)) << "1.0,2.0,0.0,0.5,0.0\n";
  std::ofstream(two / "poses.csv") << "1,0,0,0,0,1,0,0,0,0,1,0\n2,0,0,0,0,1,0,0,0,0,1,0\n";
  CHECK_THROWS_AS(load_sequence(two), ValidationError);

  std::ofstream(two / "poses.csv") << "1,0,0,0,0,1,0,0,0,0,1,0\n";
  CHECK_THROWS_AS(load_sequence(two), IoError);
}
