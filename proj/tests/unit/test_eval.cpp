// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "radmot/common/errors.hpp"
#include "radmot/core/synthetic.hpp"
#include "radmot/eval/evaluator.hpp"

using namespace radmot;
using namespace radmot::eval;

namespace {

std::vector<int> range(int a, int b) {
  std::vector<int> v(b - a);
  std::iota(v.begin(), v.end(), a);
  return v;
}

FrameObjects frame(std::int64_t idx, std::vector<ObjectInstance> objs) {
  return {idx, std::move(objs)};
}

EvalSequence scripted_scenario() {
  const std::string base = std::string(RADMOT_TEST_DATA_DIR) + "/eval_scenario/";
  return {"scripted", load_gt_jsonl(base + "gt.jsonl"), load_tracks_jsonl(base + "pred.jsonl")};
}

std::vector<EvalSequence> perfect_synthetic(int n_seq) {
  std::vector<EvalSequence> out;
  for (int s = 0; s < n_seq; ++s) {
    core::SyntheticSceneConfig cfg;
    cfg.rng_seed = 100 + s;
    const auto syn = core::generate_synthetic_sequence(cfg);
    EvalSequence seq;
    for (std::size_t t = 0; t < syn.truth.size(); ++t)
      seq.gt.frames.push_back(
          objects_from_labels(syn.sequence.frames[t].frame.frame_index, syn.truth[t].object_id));
    seq.pred = seq.gt;
    out.push_back(std::move(seq));
  }
  return out;
}

// Maximum total IoU over all partial assignments; returns the pair count.
int optimal_count(const std::vector<std::vector<double>>& iou, double thr) {
  const std::size_t n = iou.size(), m = n ? iou[0].size() : 0;
  double best_sum = -1.0;
  int best_count = 0;
  std::vector<int> assign(n, -1);
  std::vector<char> used(m, 0);
  auto rec = [&](auto&& self, std::size_t i, double sum, int count) -> void {
    if (i == n) {
      if (sum > best_sum + 1e-12) best_sum = sum, best_count = count;
      return;
    }
    self(self, i + 1, sum, count);
    for (std::size_t j = 0; j < m; ++j) {
      if (used[j] || iou[i][j] < thr) continue;
      used[j] = 1;
      self(self, i + 1, sum + iou[i][j], count + 1);
      used[j] = 0;
    }
  };
  rec(rec, 0, 0.0, 0);
  return best_count;
}

}  // namespace

TEST_CASE("point_iou examples") {
  CHECK(point_iou({1, 2, 3}, {1, 2, 3}) == 1.0);
  CHECK(point_iou({1, 2}, {3, 4}) == 0.0);
  CHECK(point_iou({1, 2, 3, 4}, {3, 4, 5, 6}) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(point_iou({}, {}) == 0.0);
}

TEST_CASE("point_iou properties") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> size(0, 12), idx(0, 20);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<int> a(size(rng)), b(size(rng));
    for (auto& v : a) v = idx(rng);
    for (auto& v : b) v = idx(rng);
    const double ab = point_iou(a, b);
    CHECK(ab == point_iou(b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    const std::set<int> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    if (!sa.empty() || !sb.empty()) CHECK((ab == 1.0) == (sa == sb));
  }
}

TEST_CASE("match_frame examples") {
  EvalConfig cfg;
  const auto gt = frame(0, {{1, range(0, 6)}, {2, range(10, 17)}});
  const auto r = match_frame(gt, gt, cfg);
  CHECK(r.tp == 2);
  CHECK(r.fp == 0);
  CHECK(r.fn == 0);
  CHECK(r.tp + r.fn == r.gt_count);

  SUBCASE("small GT object is ignored") {
    const auto small = frame(0, {{1, range(0, 4)}});
    const auto res = match_frame(small, frame(0, {}), cfg);
    CHECK(res.gt_count == 0);
    CHECK(res.tp == 0);
    CHECK(res.fn == 0);
  }
  SUBCASE("id switch across two frames") {
    IdMemory mem;
    const auto g0 = frame(0, {{1, range(0, 6)}});
    const auto g1 = frame(1, {{1, range(0, 6)}});
    CHECK(match_frame(g0, frame(0, {{7, range(0, 6)}}), cfg, &mem).id_switches == 0);
    CHECK(match_frame(g1, frame(1, {{9, range(0, 6)}}), cfg, &mem).id_switches == 1);
  }
  SUBCASE("duplicate ids are rejected with the frame index") {
    const auto dup = frame(42, {{1, range(0, 6)}, {1, range(10, 16)}});
    try {
      match_frame(dup, frame(42, {}), cfg);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("42") != std::string::npos);
    }
  }
  SUBCASE("tie-break prefers lower GT id") {
    // Pred overlaps both GT objects with IoU 0.5.
    const auto g = frame(0, {{2, range(0, 6)}, {1, range(6, 12)}});
    const auto p = frame(0, {{5, {0, 1, 2, 3, 6, 7, 8, 9}}});
    EvalConfig c = cfg;
    c.min_points_valid = 1;
    const auto res = match_frame(g, p, c);
    REQUIRE(res.matches.size() == 1);
    CHECK(res.matches[0].first == 1);
  }
}

TEST_CASE("greedy matching agrees with optimal matching counts") {
  std::mt19937_64 rng(17);
  EvalConfig cfg;
  cfg.min_points_valid = 1;
  int agree = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    std::vector<int> universe = range(0, 60);
    std::shuffle(universe.begin(), universe.end(), rng);
    const int n = std::uniform_int_distribution<int>(1, 6)(rng);
    FrameObjects g{0, {}}, p{0, {}};
    std::size_t pos = 0;
    for (int i = 0; i < n; ++i) {
      const int k = std::uniform_int_distribution<int>(3, 9)(rng);
      g.objects.push_back({i, {universe.begin() + pos, universe.begin() + pos + k}});
      pos += k;
    }
    std::set<int> taken;
    const int m = std::uniform_int_distribution<int>(1, 6)(rng);
    std::uniform_real_distribution<double> u(0, 1);
    for (int j = 0; j < m; ++j) {
      const auto& src = g.objects[std::uniform_int_distribution<int>(0, n - 1)(rng)].points;
      std::set<int> obj;
      for (int q : src)
        if (u(rng) < 0.7 && !taken.count(q)) obj.insert(q);
      const int extra = std::uniform_int_distribution<int>(0, 3)(rng);
      for (int e = 0; e < extra && pos + e < universe.size(); ++e)
        if (!taken.count(universe[pos + e])) obj.insert(universe[pos + e]);
      pos += extra;
      if (u(rng) < 0.3) {
        const auto& other = g.objects[std::uniform_int_distribution<int>(0, n - 1)(rng)].points;
        for (std::size_t q = 0; q < std::min<std::size_t>(3, other.size()); ++q)
          if (!taken.count(other[q])) obj.insert(other[q]);
      }
      if (obj.empty()) continue;
      taken.insert(obj.begin(), obj.end());
      p.objects.push_back({100 + j, {obj.begin(), obj.end()}});
    }
    std::vector<std::vector<double>> iou(g.objects.size(), std::vector<double>(p.objects.size()));
    for (std::size_t i = 0; i < g.objects.size(); ++i)
      for (std::size_t j = 0; j < p.objects.size(); ++j)
        iou[i][j] = point_iou(g.objects[i].points, p.objects[j].points);
    agree += match_frame(g, p, cfg).tp == optimal_count(iou, cfg.iou_threshold);
  }
  MESSAGE("greedy/optimal agreement " << agree << "/" << trials);
  CHECK(agree >= trials * 95 / 100);
}

TEST_CASE("clear metrics from counts") {
  const auto c = clear_from_counts(100, 10, 20, 5);
  CHECK(*c.mota == doctest::Approx(0.65).epsilon(1e-12));
  CHECK(*c.moda == doctest::Approx(0.70).epsilon(1e-12));
  const auto undefined = clear_from_counts(0, 3, 0, 0);
  CHECK(!undefined.mota);
  CHECK(!undefined.moda);
}

TEST_CASE("mostly tracked and mostly lost") {
  EvalConfig cfg;
  EvalSequence seq;
  for (int t = 0; t < 10; ++t) {
    seq.gt.frames.push_back(frame(t, {{1, range(0, 6)}, {2, range(10, 16)}}));
    std::vector<ObjectInstance> preds{{50, range(10, 16)}};
    if (t < 3) preds.push_back({40, range(0, 6)});
    seq.pred.frames.push_back(frame(t, preds));
  }
  const auto c = evaluate_clear({seq}, cfg);
  CHECK(c.trajectories == 2);
  CHECK(c.mostly_tracked == 1);  // object 2 only; object 1 at 3/10 is neither
  CHECK(c.mostly_lost == 0);
  CHECK(*c.mt + *c.ml <= 1.0);

  const auto perfect = evaluate_clear({EvalSequence{"p", seq.gt, seq.gt}}, cfg);
  CHECK(*perfect.mota == 1.0);
  CHECK(*perfect.moda == 1.0);
  CHECK(*perfect.mt == 1.0);
  CHECK(*perfect.ml == 0.0);
}

TEST_CASE("amota family trivial cases") {
  EvalConfig cfg;
  const auto seqs = perfect_synthetic(3);
  const auto a = amota_family(seqs, cfg);
  CHECK(a.amota == doctest::Approx(1.0));
  CHECK(a.samota == doctest::Approx(1.0));
  CHECK(a.amotp == doctest::Approx(1.0));
  CHECK(a.table.size() == 40);

  auto empty = seqs;
  for (auto& s : empty) s.pred.frames.clear();
  const auto e = amota_family(empty, cfg);
  CHECK(e.amota == 0.0);
  CHECK(e.samota == 0.0);
}

TEST_CASE("ground truth as predictions is perfect on synthetic sequences") {
  EvalConfig cfg;
  for (const auto& seq : perfect_synthetic(5)) {
    const auto rep = evaluate({seq}, cfg);
    CHECK(*rep.clear.mota == 1.0);
    CHECK(*rep.clear.moda == 1.0);
    CHECK(rep.clear.id_switches == 0);
    CHECK(rep.amota.table.back().reached);
    CHECK(rep.amota.table.back().mota == 1.0);
  }
}

TEST_CASE("per-recall table matches exhaustive threshold enumeration") {
  // Frozen from tests/oracles/eval_oracle.py.
  const std::vector<double> thr_rows = {
      0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.7,
      0.7, 0.7, 0.7, 0.7, 0.7, 0.7, 0.6, 0.6, 0.6, 0.6, 0.6, 0.6, 0.4, 0.4,
      0.4, 0.4, 0.4, 0.4, 0.4, 0.4, 0.4, 0.4, 0.0, 0.0, 0.0, 0.0};
  const std::vector<double> smota_rows = {
      1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1,
      0.98039215686274495, 0.92592592592592604, 0.87719298245614041, 0.83333333333333337,
      0.95238095238095233, 0.90909090909090906, 0.86956521739130443, 0.83333333333333348,
      0.80000000000000004, 0.76923076923076916, 1, 1, 1, 1, 0.967741935483871, 0.9375,
      0.90909090909090917, 0.88235294117647056, 0.85714285714285721, 0.83333333333333326,
      0, 0, 0, 0};
  const auto mota_at = [](double t) {
    if (t == 0.9) return 0.33333333333333337;
    if (t == 0.7) return 0.41666666666666663;
    if (t == 0.6) return 0.5;
    if (t == 0.4) return 0.75;
    return 0.0;
  };
  const auto motp_at = [](double t) {
    if (t == 0.9 || t == 0.7) return 1.0;
    if (t == 0.6) return 0.9285714285714286;
    if (t == 0.4) return 0.81168831168831168;
    return 0.0;
  };
  EvalConfig cfg;
  const auto a = amota_family({scripted_scenario()}, cfg);
  REQUIRE(a.table.size() == 40);
  for (std::size_t j = 0; j < 40; ++j) {
    const auto& row = a.table[j];
    CHECK(row.reached == (j < 36));
    CHECK(row.threshold == thr_rows[j]);
    CHECK(row.mota == doctest::Approx(mota_at(thr_rows[j])).epsilon(1e-12));
    CHECK(row.smota == doctest::Approx(smota_rows[j]).epsilon(1e-12));
    CHECK(row.motp == doctest::Approx(motp_at(thr_rows[j])).epsilon(1e-12));
  }
  CHECK(a.amota == doctest::Approx(0.44375000000000009).epsilon(1e-12));
  CHECK(a.samota == doctest::Approx(0.85344018890582141).epsilon(1e-12));
  CHECK(a.amotp == doctest::Approx(0.84220779220779196).epsilon(1e-12));
}

TEST_CASE("best single-threshold MOTA") {
  EvalConfig cfg;
  const auto rep = evaluate({scripted_scenario()}, cfg);
  // Threshold 0.4: tp 11, fp 1, fn 1, idsw 1 over 12 GT.
  CHECK(*rep.clear.mota == doctest::Approx(0.75));
  CHECK(rep.best_threshold == 0.4);
  CHECK(*rep.clear.moda >= *rep.clear.mota);
  CHECK(*rep.unfiltered.mota == doctest::Approx(0.5));
}

TEST_CASE("sweeps") {
  EvalConfig cfg;
  const auto seqs = perfect_synthetic(3);
  const auto single = sweep(seqs, cfg, SweepAxis::kIouThreshold, {0.25});
  REQUIRE(single.size() == 1);
  CHECK(report_to_json(single[0].report) == report_to_json(evaluate(seqs, cfg)));

  const auto iou_rows = sweep(seqs, cfg, SweepAxis::kIouThreshold, {0.25, 0.5});
  CHECK(report_to_json(iou_rows[0].report) == report_to_json(iou_rows[1].report));

  const auto mp = sweep(seqs, cfg, SweepAxis::kMinPointsValid, {1, 3, 5, 7, 9, 12});
  for (std::size_t i = 1; i < mp.size(); ++i) CHECK(mp[i].report.clear.gt <= mp[i - 1].report.clear.gt);

  const auto csv = sweep_to_csv(SweepAxis::kIouThreshold, iou_rows);
  CHECK(csv.rfind("iou_threshold,mota", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK_THROWS_AS(sweep(seqs, cfg, SweepAxis::kIouThreshold, {}), ValidationError);
}

TEST_CASE("config validation") {
  EvalConfig c;
  c.iou_threshold = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.min_points_valid = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.recall_steps = 1;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("jsonl round trip and svg output") {
  const auto seqs = perfect_synthetic(1);
  const auto text = gt_to_jsonl(seqs[0].gt);
  CHECK(!text.empty());
  const auto svg = svg_line_plot("t", "x", "y", {{"a", {0, 1}, {0.5, 1.0}}});
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("polyline") != std::string::npos);
}
