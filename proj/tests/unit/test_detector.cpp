// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "oracles/cluster_oracle.hpp"
#include "radmot/detect/detector.hpp"
#include "test_util.hpp"

using namespace radmot;
using namespace radmot::detect;

namespace {

core::RadarFrame frame_at(const std::vector<core::Vec3>& pts) {
  core::RadarFrame f;
  for (const auto& p : pts) {
    core::RadarPoint rp;
    rp.position = p;
    f.points.push_back(rp);
  }
  return f;
}

std::set<std::set<int>> as_sets(const std::vector<std::vector<int>>& v) {
  std::set<std::set<int>> out;
  for (const auto& c : v) out.insert(std::set<int>(c.begin(), c.end()));
  return out;
}

}  // namespace

TEST_CASE("threshold_mask uses a strict comparison") {
  CHECK(threshold_mask({{0.9, 0.2, 0.6}}, 0.5).mask == std::vector<std::uint8_t>{1, 0, 1});
  CHECK(threshold_mask({{0.5}}, 0.5).mask == std::vector<std::uint8_t>{0});
  const auto m = threshold_mask({{0, 0, 0}}, 0.5);
  CHECK(m.count() == 0);
  const auto f = frame_at({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}});
  const auto d = cluster_moving(f, m, {Matrix(3, 3)}, {Matrix(3, 4)}, DetectConfig{});
  CHECK(d.clusters.empty());
}

TEST_CASE("classify_motion: zero weights and reference values") {
  const MotionClassifier cls(3, 2);
  CHECK(classify_motion({Matrix(4, 3, 1.0)}, nn::WeightStore::zeros(cls.specs()), 2).scores ==
        std::vector<double>(4, 0.5));
  const auto w = test::patterned_weights(cls.specs(), 0.9);
  const auto s = classify_motion({test::make_matrix(2, 3, {0.5, -1.0, 2.0, -0.3, 0.8, 0.1})}, w, 2);
  // tests/oracles/motion_oracle.py
  CHECK(std::abs(s.scores[0] - 0.42677272359862534) < 1e-6);
  CHECK(std::abs(s.scores[1] - 0.40893002314900634) < 1e-6);
  CHECK(classify_motion({Matrix(0, 3)}, w, 2).scores.empty());
}

TEST_CASE("cluster_moving examples") {
  DetectConfig cfg;
  const auto f = frame_at({{0, 0, 0}, {0.5, 0, 0}, {10, 0, 0}, {10.5, 0, 0}});
  const MotionMask all{{1, 1, 1, 1}};
  auto d = cluster_moving(f, all, {Matrix(4, 3)}, {Matrix(4, 8)}, cfg);
  REQUIRE(d.clusters.size() == 2);
  CHECK(d.clusters[0].point_indices == std::vector<int>{0, 1});
  CHECK(d.clusters[1].point_indices == std::vector<int>{2, 3});
  CHECK(d.clusters[1].flow_rows.rows() == 2);
  CHECK(d.clusters[1].embedding_rows.cols() == 8);

  const auto lone = frame_at({{0, 0, 0}});
  CHECK(cluster_moving(lone, {{1}}, {Matrix(1, 3)}, {Matrix(1, 4)}, cfg).clusters.empty());

  // Two adjacent groups with opposite flow split once flow enters the metric.
  const auto adj = frame_at({{0, 0, 0}, {0.3, 0, 0}, {0.6, 0.9, 0}, {0.9, 0.9, 0}});
  Matrix flow = test::make_matrix(4, 3, {1, 0, 0, 1, 0, 0, -1, 0, 0, -1, 0, 0});
  d = cluster_moving(adj, {{1, 1, 1, 1}}, {flow}, {Matrix(4, 2)}, cfg);
  CHECK(d.clusters.size() == 2);
  d = cluster_moving(adj, {{1, 1, 1, 1}}, {Matrix(4, 3)}, {Matrix(4, 2)}, cfg);
  CHECK(d.clusters.size() == 1);
}

TEST_CASE("clustering features scale each block") {
  DetectConfig cfg;
  cfg.embedding_channels = 4;
  const auto f = frame_at({{1, 2, 3}});
  const Matrix emb = test::make_matrix(1, 6, {4, 4, 4, 4, 9, 9});
  const Matrix feats = clustering_features(f, test::make_matrix(1, 3, {0.5, 0, 0}), emb, cfg);
  REQUIRE(feats.cols() == 10);
  CHECK(feats(0, 0) == 1.0);
  CHECK(feats(0, 3) == 0.5);
  CHECK(feats(0, 6) == doctest::Approx(0.2));
}

TEST_CASE("dbscan equals the brute-force epsilon graph on random instances") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<int> nd(0, 120);
    const int n = nd(rng);
    const Matrix pts = test::random_matrix(rng, n, 6, 0.0, 8.0);
    std::vector<int> cand;
    for (int i = 0; i < n; ++i) {
      if (rng() % 4 != 0) cand.push_back(i);
    }
    const int min_pts = 1 + trial % 4;
    const auto got = dbscan(pts, cand, 1.5, min_pts);
    const auto ref = oracle::eps_graph(pts, cand, 1.5, min_pts);

    // Disjoint and within the candidate set.
    std::set<int> seen;
    for (const auto& c : got) {
      for (int i : c) {
        CHECK(seen.insert(i).second);
        CHECK(std::find(cand.begin(), cand.end(), i) != cand.end());
      }
    }
    // Core points partition exactly as the epsilon graph's core components.
    std::set<std::set<int>> core_part;
    for (const auto& c : got) {
      std::set<int> core;
      for (int i : c) {
        const auto slot = std::find(cand.begin(), cand.end(), i) - cand.begin();
        if (ref.is_core[slot]) core.insert(i);
      }
      core_part.insert(core);
    }
    CHECK(core_part == ref.core_components);
    if (min_pts <= 2) CHECK(as_sets(got) == oracle::components_min2(pts, cand, 1.5, min_pts));
  }
}

TEST_CASE("dbscan output is invariant to input order") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix pts = test::random_matrix(rng, 60, 3, 0.0, 10.0);
    std::vector<int> cand(60);
    std::iota(cand.begin(), cand.end(), 0);
    const auto a = as_sets(dbscan(pts, cand, 1.5, 2));
    std::vector<int> perm = cand;
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix permuted(60, 3);
    for (int i = 0; i < 60; ++i) std::copy(pts.row(perm[i]).begin(), pts.row(perm[i]).end(), permuted.row(i).begin());
    std::set<std::set<int>> b;
    for (const auto& c : dbscan(permuted, cand, 1.5, 2)) {
      std::set<int> mapped;
      for (int i : c) mapped.insert(perm[i]);
      b.insert(mapped);
    }
    CHECK(a == b);
  }
}

TEST_CASE("external detections wrap index sets") {
  const Matrix flow = test::make_matrix(3, 3, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  const auto d = external_detections({{2, 0, 2}, {1}}, {flow}, {Matrix(3, 2)}, 2);
  REQUIRE(d.clusters.size() == 1);
  CHECK(d.clusters[0].point_indices == std::vector<int>{0, 2});
  CHECK(d.clusters[0].flow_rows(1, 0) == 7.0);
}
