// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>
#include <set>

#include "radmot/assoc/associator.hpp"
#include "radmot/train/grad_check.hpp"
#include "radmot/train/losses.hpp"
#include "test_util.hpp"

using namespace radmot;
using namespace radmot::assoc;

namespace {

core::RadarFrame frame_at(const std::vector<core::Vec3>& pts, std::int64_t index = 0) {
  core::RadarFrame f;
  f.frame_index = index;
  for (const auto& p : pts) {
    core::RadarPoint rp;
    rp.position = p;
    f.points.push_back(rp);
  }
  return f;
}

detect::Cluster cluster_of(std::vector<int> idx, const Matrix& flow, const Matrix& emb) {
  return detect::make_cluster(std::move(idx), flow, emb);
}

double row_sum(const Matrix& m, std::size_t i) {
  double s = 0;
  for (std::size_t j = 0; j < m.cols(); ++j) s += m(i, j);
  return s;
}
double col_sum(const Matrix& m, std::size_t j) {
  double s = 0;
  for (std::size_t i = 0; i < m.rows(); ++i) s += m(i, j);
  return s;
}

}  // namespace

TEST_CASE("descriptor examples") {
  const auto f = frame_at({{0, 0, 0}, {2, 0, 0}, {5, 5, 5}});
  const Matrix flow = test::make_matrix(3, 3, {1, 2, 3, 1, 2, 3, 9, 9, 9});
  const Matrix emb = test::make_matrix(3, 2, {0.5, -1, 0.7, -2, 0, 0});
  std::vector<int> arg;
  const auto d = aggregate_descriptor(cluster_of({0, 1}, flow, emb), f, 2, &arg);
  REQUIRE(d.size() == 11);
  CHECK(d[0] == 1.0);
  CHECK(d[3] == 1.0);
  CHECK(d[4] == 0.0);
  CHECK(d[6] == 1.0);
  CHECK(d[8] == 3.0);
  CHECK(d[9] == 0.7);
  CHECK(d[10] == -1.0);
  CHECK(arg == std::vector<int>{0, 0, 0, 1, 0});  // ties keep the first point

  const auto single = aggregate_descriptor(cluster_of({2}, flow, emb), f, 2);
  for (int k = 3; k < 6; ++k) CHECK(single[k] == 0.0);
}

TEST_CASE("affinity: shapes, zero weights and reference logit") {
  AssocConfig cfg;
  cfg.descriptor_embedding = 1;
  cfg.affinity_hidden = {3, 2};
  const AffinityNet net(cfg.descriptor_width(), cfg.affinity_hidden);
  const auto zero = nn::WeightStore::zeros(net.specs());
  const Descriptor a(10, 0.3), b(10, -0.2);
  CHECK(affinity({a}, {b, a}, zero, cfg) == Matrix(1, 2));
  CHECK(affinity({}, {a, b}, zero, cfg).rows() == 0);
  CHECK(affinity({}, {a, b}, zero, cfg).cols() == 2);
  CHECK(affinity({a}, {}, zero, cfg).rows() == 1);
  CHECK_THROWS_AS(affinity({Descriptor(4)}, {a}, zero, cfg), ContractViolation);

  const auto w = test::patterned_weights(net.specs(), 0.4);
  const Descriptor lk{1.0, 0.5, 0.2, 0.1, 0.05, 0.0, 0.3, -0.2, 0.1, 0.7};
  const Descriptor lm{0.8, 0.4, 0.2, 0.12, 0.04, 0.01, 0.25, -0.1, 0.0, 0.5};
  // tests/oracles/assoc_oracle.py
  CHECK(std::abs(affinity({lk}, {lm}, w, cfg)(0, 0) - 0.28261325680312605) < 1e-6);
}

TEST_CASE("sinkhorn examples") {
  CHECK(sinkhorn(test::make_matrix(1, 1, {-3.7}), 30, 1.0)(0, 0) == doctest::Approx(1.0));
  const Matrix eq = sinkhorn(Matrix(2, 2, 1.3), 30, 1.0);
  for (double v : eq.storage()) CHECK(v == doctest::Approx(0.5));
  const Matrix s = sinkhorn(test::make_matrix(2, 2, {5, 0, 0, 5}), 50, 1.0);
  // tests/oracles/assoc_oracle.py
  CHECK(std::abs(s(0, 0) - 0.99330714907571516) < 1e-9);
  CHECK(std::abs(s(0, 1) - 0.0066928509242848554) < 1e-9);
  CHECK(s(0, 0) > 0.99);
  CHECK(extract_matches(s, 0.5) == std::vector<Match>{{0, 0, s(0, 0)}, {1, 1, s(1, 1)}});
  CHECK_THROWS_AS(sinkhorn(test::make_matrix(1, 2, {0, std::nan("")}), 5, 1.0), ValidationError);
  CHECK(sinkhorn(Matrix(0, 3), 5, 1.0).cols() == 3);
}

TEST_CASE("sinkhorn properties on random matrices") {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> wide(0.0, 2.0);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t k = 1 + rng() % 6;
    const std::size_t m = 1 + rng() % 6;
    Matrix raw(k, m);
    for (auto& v : raw.storage()) v = wide(rng);
    const Matrix a = sinkhorn(raw, 50, 1.0);
    Matrix shifted = raw;
    for (auto& v : shifted.storage()) v += 37.25;
    const Matrix b = sinkhorn(shifted, 50, 1.0);
    for (std::size_t i = 0; i < a.storage().size(); ++i) {
      CHECK(std::abs(a.storage()[i] - b.storage()[i]) <= 1e-9);
      CHECK(a.storage()[i] > 0.0);
      CHECK(a.storage()[i] <= 1.0 + 1e-12);
    }
    if (k != m) {
      // Rectangular: both sides bounded by 1 after every iteration.
      for (std::size_t i = 0; i < k; ++i) CHECK(row_sum(a, i) <= 1.0 + 1e-6);
      for (std::size_t j = 0; j < m; ++j) CHECK(col_sum(a, j) <= 1.0 + 1e-6);
    } else {
      // Square: the last half step normalises columns exactly.
      for (std::size_t j = 0; j < m; ++j) CHECK(col_sum(a, j) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  // Unit-variance square logits converge to doubly stochastic within 50 iterations.
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 8;
    Matrix raw(n, n);
    for (auto& v : raw.storage()) v = unit(rng);
    const Matrix a = sinkhorn(raw, 50, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(row_sum(a, i) - 1.0) <= 1e-6);
      CHECK(std::abs(col_sum(a, i) - 1.0) <= 1e-6);
    }
  }
}

TEST_CASE("affinity loss gradients flow through the normalisation") {
  std::mt19937_64 rng(3);
  AssocConfig cfg;
  cfg.descriptor_embedding = 2;
  cfg.affinity_hidden = {6, 5};
  const AffinityNet net(cfg.descriptor_width(), cfg.affinity_hidden);
  const auto w = nn::WeightStore::glorot(net.specs(), 8);
  for (auto [k, m] : {std::pair{3, 3}, std::pair{2, 4}, std::pair{4, 2}}) {
    CAPTURE(k);
    CAPTURE(m);
    std::vector<Descriptor> det, trk;
    for (int i = 0; i < k; ++i) {
      const Matrix r = test::random_matrix(rng, 1, cfg.descriptor_width(), -2, 2);
      det.emplace_back(r.storage());
    }
    for (int i = 0; i < m; ++i) {
      const Matrix r = test::random_matrix(rng, 1, cfg.descriptor_width(), -2, 2);
      trk.emplace_back(r.storage());
    }
    Matrix gt(k, m);
    for (int i = 0; i < std::min(k, m); ++i) gt(i, (i + 1) % m) = 1.0;
    auto loss = [&](const nn::WeightStore& ws, nn::GradientStore* g) {
      AffinityNet::Cache cache;
      SinkhornTrace trace;
      const Matrix raw = net.raw(det, trk, ws, &cache);
      const Matrix s = sinkhorn(raw, 10, 0.7, &trace);
      Matrix d;
      const double l = train::loss_aff(s, gt, 1e-7, &d);
      if (g) net.backward(cache, sinkhorn_backward(trace, d), ws, *g);
      return l;
    };
    const auto r = train::grad_check(w, loss);
    CAPTURE(r.worst.tensor);
    CHECK(r.ok(1e-3));
  }
}

TEST_CASE("sinkhorn backward matches finite differences on the logits") {
  std::mt19937_64 rng(9);
  for (auto [k, m] : {std::pair{3, 3}, std::pair{2, 5}, std::pair{5, 3}}) {
    Matrix raw = test::random_matrix(rng, k, m, -2, 2);
    const Matrix c = test::random_matrix(rng, k, m);
    auto value = [&](const Matrix& r) {
      const Matrix s = sinkhorn(r, 8, 1.0);
      double l = 0;
      for (std::size_t i = 0; i < s.storage().size(); ++i) l += c.storage()[i] * s.storage()[i];
      return l;
    };
    SinkhornTrace t;
    sinkhorn(raw, 8, 1.0, &t);
    const Matrix d = sinkhorn_backward(t, c);
    for (std::size_t i = 0; i < raw.storage().size(); ++i) {
      const double saved = raw.storage()[i];
      raw.storage()[i] = saved + 1e-6;
      const double up = value(raw);
      raw.storage()[i] = saved - 1e-6;
      const double down = value(raw);
      raw.storage()[i] = saved;
      CHECK(d.storage()[i] == doctest::Approx((up - down) / 2e-6).epsilon(1e-5).scale(1e-8));
    }
  }
}

TEST_CASE("extract_matches is one-to-one with a deterministic tie-break") {
  CHECK(extract_matches(Matrix(2, 2, 0.2), 0.5).empty());
  const auto two_one = extract_matches(test::make_matrix(2, 1, {0.7, 0.9}), 0.5);
  REQUIRE(two_one.size() == 1);
  CHECK(two_one[0].detection == 1);
  const auto ties = extract_matches(Matrix(2, 2, 0.5), 0.5);
  CHECK(ties == std::vector<Match>{{0, 0, 0.5}, {1, 1, 0.5}});

  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix s = test::random_matrix(rng, 1 + rng() % 7, 1 + rng() % 7, 0, 1);
    const auto ms = extract_matches(s, 0.3);
    std::set<int> rows, cols;
    for (const auto& m : ms) {
      CHECK(rows.insert(m.detection).second);
      CHECK(cols.insert(m.track).second);
      CHECK(m.score >= 0.3);
    }
  }
}

TEST_CASE("track lifecycle") {
  AssocConfig cfg;
  cfg.descriptor_embedding = 1;
  const auto f = frame_at({{0, 0, 0}, {1, 0, 0}, {5, 0, 0}, {6, 0, 0}, {9, 0, 0}, {10, 0, 0}}, 3);
  const Matrix flow(6, 3), emb(6, 1);
  std::vector<DetectionSummary> dets;
  for (auto idx : {std::vector<int>{0, 1}, {2, 3}, {4, 5}}) {
    dets.push_back(summarize(cluster_of(idx, flow, emb), f, 1));
  }
  TrackSet ts = update_tracks({}, dets, {}, f, cfg);
  REQUIRE(ts.tracks.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(ts.tracks[i].id == i);
    CHECK(ts.tracks[i].confidence == 0.5);
  }
  CHECK(ts.next_id == 3);

  TrackSet one;
  one.tracks.push_back(ts.tracks[0]);
  one.next_id = 3;
  auto next = update_tracks(one, {dets[0]}, {{0, 0, 0.9}}, f, cfg);
  REQUIRE(next.tracks.size() == 1);
  CHECK(next.tracks[0].id == 0);
  CHECK(next.tracks[0].confidence == 0.9);

  TrackSet two;
  two.tracks = {ts.tracks[0], ts.tracks[1]};
  two.next_id = 3;
  next = update_tracks(two, {dets[0]}, {{0, 0, 0.8}}, f, cfg);
  CHECK(next.tracks.size() == 1);
  // Fresh ids keep increasing after removals.
  next = update_tracks(next, {dets[1]}, {}, f, cfg);
  CHECK(next.tracks.back().id == 3);

  cfg.max_missed_frames = 1;
  next = update_tracks(two, {dets[0]}, {{0, 0, 0.8}}, f, cfg);
  CHECK(next.tracks.size() == 2);
  CHECK(next.tracks[1].missed == 1);

  TrackSet dup;
  dup.tracks = {ts.tracks[0], ts.tracks[0]};
  dup.next_id = 3;
  CHECK_THROWS_AS(update_tracks(dup, {}, {}, f, cfg), ContractViolation);

  const auto lines = track_records_jsonl(ts, 3);
  const auto first = nlohmann::json::parse(lines.substr(0, lines.find('\n')));
  CHECK(first["track_id"] == 0);
  CHECK(first["point_indices"] == std::vector<int>{0, 1});
  CHECK(first["centroid"][0] == 0.5);
  CHECK(track_records_jsonl(ts, 4).empty());
}

TEST_CASE("hungarian matches exhaustive enumeration") {
  const auto h = hungarian(test::make_matrix(2, 2, {1, 10, 10, 1}));
  CHECK(h == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}});
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t r = 1 + rng() % 5, c = 1 + rng() % 5;
    const Matrix cost = test::random_matrix(rng, r, c, 0, 10);
    const auto got = hungarian(cost);
    CHECK(got.size() == std::min(r, c));
    double total = 0;
    for (auto [a, b] : got) total += cost(a, b);
    // Exhaustive search over injective maps from the shorter side.
    const bool rows_short = r <= c;
    const std::size_t s = rows_short ? r : c, l = rows_short ? c : r;
    std::vector<int> perm(l);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300;
    do {
      double t = 0;
      for (std::size_t i = 0; i < s; ++i) t += rows_short ? cost(i, perm[i]) : cost(perm[i], i);
      best = std::min(best, t);
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(total == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("baseline matching with constant-velocity prediction") {
  AssocConfig cfg;
  cfg.descriptor_embedding = 1;
  const Matrix flow(4, 3), emb(4, 1);
  auto f0 = frame_at({{0, 0, 0}, {0.2, 0, 0}, {0, 5, 0}, {0.2, 5, 0}}, 0);
  std::vector<DetectionSummary> d0{summarize(cluster_of({0, 1}, flow, emb), f0, 1),
                                   summarize(cluster_of({2, 3}, flow, emb), f0, 1)};
  const TrackSet ts = update_tracks({}, d0, {}, f0, cfg);
  for (Matcher m : {Matcher::kGreedy, Matcher::kHungarian}) {
    const auto ms = baseline_match(ts, d0, f0, m, 3.0);
    REQUIRE(ms.size() == 2);
    CHECK(ms[0].track == 0);
    CHECK(ms[1].track == 1);
    CHECK(ms[0].score == 1.0);
  }
  // Far detections are gated out.
  auto far = frame_at({{40, 0, 0}, {40.2, 0, 0}, {0, 5, 0}, {0.2, 5, 0}}, 1);
  std::vector<DetectionSummary> d1{summarize(cluster_of({0, 1}, flow, emb), far, 1)};
  CHECK(baseline_match(ts, d1, far, Matcher::kGreedy, 3.0).empty());
}

TEST_CASE("geometric affinity prior prefers nearby descriptors") {
  AssocConfig cfg;
  const auto w = geometric_affinity_prior(cfg);
  Descriptor a(cfg.descriptor_width(), 0.0), b = a, c = a;
  b[0] = 0.5;
  c[1] = 6.0;
  const Matrix raw = affinity({a}, {b, c}, w, cfg);
  CHECK(raw(0, 0) > raw(0, 1));
  CHECK(raw(0, 0) == doctest::Approx(-2.0 * 0.99 * 0.5));
  const auto s = sinkhorn(affinity({a, c}, {b, c}, w, cfg), 30, 1.0);
  CHECK(extract_matches(s, 0.5).size() == 2);
}
