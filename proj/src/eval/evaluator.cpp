// SPDX-License-Identifier: Apache-2.0

#include "radmot/eval/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <tuple>

#include "radmot/common/errors.hpp"
#include "radmot/core/sequence_io.hpp"

namespace radmot::eval {

void EvalConfig::validate() const {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0))
    throw ValidationError("iou_threshold must lie in (0, 1]");
  if (min_points_valid < 1) throw ValidationError("min_points_valid must be >= 1");
  if (recall_steps < 2) throw ValidationError("recall_steps must be >= 2");
}

FrameObjects objects_from_labels(std::int64_t frame_index, const std::vector<int>& object_id) {
  std::map<int, std::vector<int>> groups;
  for (std::size_t i = 0; i < object_id.size(); ++i)
    if (object_id[i] >= 0) groups[object_id[i]].push_back(static_cast<int>(i));
  FrameObjects f;
  f.frame_index = frame_index;
  for (auto& [id, pts] : groups) f.objects.push_back({id, std::move(pts), 1.0});
  return f;
}

double point_iou(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> sa(a), sb(b);
  std::sort(sa.begin(), sa.end());
  sa.erase(std::unique(sa.begin(), sa.end()), sa.end());
  std::sort(sb.begin(), sb.end());
  sb.erase(std::unique(sb.begin(), sb.end()), sb.end());
  if (sa.empty() && sb.empty()) return 0.0;
  std::size_t inter = 0, i = 0, j = 0;
  while (i < sa.size() && j < sb.size()) {
    if (sa[i] == sb[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (sa[i] < sb[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  const std::size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

void check_unique_ids(const FrameObjects& f, const char* side) {
  std::set<int> seen;
  for (const auto& o : f.objects) {
    if (!seen.insert(o.id).second) {
      std::ostringstream msg;
      msg << "duplicate " << side << " id " << o.id << " in frame " << f.frame_index;
      throw ValidationError(msg.str());
    }
  }
}

std::vector<const ObjectInstance*> valid_objects(const FrameObjects& f, int min_points,
                                                 double min_confidence) {
  std::vector<const ObjectInstance*> out;
  for (const auto& o : f.objects) {
    if (static_cast<int>(o.points.size()) < min_points) continue;
    if (o.confidence < min_confidence) continue;
    out.push_back(&o);
  }
  return out;
}

FrameResult match_filtered(const FrameObjects& gt, const FrameObjects& pred, const EvalConfig& cfg,
                           double min_confidence, IdMemory* memory) {
  check_unique_ids(gt, "ground-truth");
  check_unique_ids(pred, "prediction");
  const auto g = valid_objects(gt, cfg.min_points_valid, -std::numeric_limits<double>::infinity());
  const auto p = valid_objects(pred, cfg.min_points_valid, min_confidence);

  struct Pair {
    double iou;
    int gi, pi;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double iou = point_iou(g[i]->points, p[j]->points);
      if (iou >= cfg.iou_threshold) pairs.push_back({iou, static_cast<int>(i), static_cast<int>(j)});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [&](const Pair& a, const Pair& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    const int ga = g[a.gi]->id, gb = g[b.gi]->id;
    if (ga != gb) return ga < gb;
    return p[a.pi]->id < p[b.pi]->id;
  });

  FrameResult r;
  r.gt_count = static_cast<int>(g.size());
  std::vector<char> g_used(g.size(), 0), p_used(p.size(), 0);
  for (const auto& pr : pairs) {
    if (g_used[pr.gi] || p_used[pr.pi]) continue;
    g_used[pr.gi] = p_used[pr.pi] = 1;
    ++r.tp;
    r.matched_iou_sum += pr.iou;
    r.matches.emplace_back(g[pr.gi]->id, p[pr.pi]->id);
  }
  r.fn = r.gt_count - r.tp;
  r.fp = static_cast<int>(p.size()) - r.tp;
  std::sort(r.matches.begin(), r.matches.end());
  if (memory) {
    for (const auto& [gid, pid] : r.matches) {
      auto it = memory->find(gid);
      if (it != memory->end() && it->second != pid) ++r.id_switches;
      (*memory)[gid] = pid;
    }
  }
  return r;
}

struct Accumulator {
  long gt = 0, tp = 0, fp = 0, fn = 0, ids = 0;
  double iou_sum = 0.0;
  int trajectories = 0, mt = 0, ml = 0;
};

// Walks the union of GT and prediction frame indices of every sequence.
Accumulator accumulate(const std::vector<EvalSequence>& seqs, const EvalConfig& cfg,
                       double min_confidence) {
  Accumulator acc;
  const FrameObjects empty;
  for (const auto& s : seqs) {
    std::map<std::int64_t, std::pair<const FrameObjects*, const FrameObjects*>> frames;
    for (const auto& f : s.gt.frames) frames[f.frame_index].first = &f;
    for (const auto& f : s.pred.frames) frames[f.frame_index].second = &f;
    IdMemory memory;
    std::map<int, std::pair<int, int>> spans;  // gt id -> (valid frames, matched frames)
    for (const auto& [idx, fp] : frames) {
      FrameObjects gt_f = fp.first ? *fp.first : empty;
      FrameObjects pr_f = fp.second ? *fp.second : empty;
      gt_f.frame_index = pr_f.frame_index = idx;
      const FrameResult r = match_filtered(gt_f, pr_f, cfg, min_confidence, &memory);
      acc.gt += r.gt_count;
      acc.tp += r.tp;
      acc.fp += r.fp;
      acc.fn += r.fn;
      acc.ids += r.id_switches;
      acc.iou_sum += r.matched_iou_sum;
      for (const auto& o : gt_f.objects)
        if (static_cast<int>(o.points.size()) >= cfg.min_points_valid) ++spans[o.id].first;
      for (const auto& m : r.matches) ++spans[m.first].second;
    }
    for (const auto& [id, vm] : spans) {
      if (vm.first == 0) continue;
      ++acc.trajectories;
      const double frac = static_cast<double>(vm.second) / vm.first;
      if (frac >= 0.8) ++acc.mt;
      if (frac <= 0.2) ++acc.ml;
    }
  }
  return acc;
}

ClearMetrics to_clear(const Accumulator& a) {
  ClearMetrics c = clear_from_counts(a.gt, a.fp, a.fn, a.ids);
  c.tp = a.tp;
  c.matched_iou_sum = a.iou_sum;
  c.trajectories = a.trajectories;
  c.mostly_tracked = a.mt;
  c.mostly_lost = a.ml;
  if (a.trajectories > 0) {
    c.mt = static_cast<double>(a.mt) / a.trajectories;
    c.ml = static_cast<double>(a.ml) / a.trajectories;
  }
  if (a.tp > 0) c.motp = a.iou_sum / static_cast<double>(a.tp);
  return c;
}

// Distinct prediction confidences, highest first.
std::vector<double> candidate_thresholds(const std::vector<EvalSequence>& seqs) {
  std::set<double, std::greater<>> s;
  for (const auto& seq : seqs)
    for (const auto& f : seq.pred.frames)
      for (const auto& o : f.objects) s.insert(o.confidence);
  return {s.begin(), s.end()};
}

}  // namespace

FrameResult match_frame(const FrameObjects& gt, const FrameObjects& pred, const EvalConfig& cfg,
                        IdMemory* memory) {
  return match_filtered(gt, pred, cfg, -std::numeric_limits<double>::infinity(), memory);
}

ClearMetrics clear_from_counts(long gt, long fp, long fn, long id_switches) {
  ClearMetrics c;
  c.gt = gt;
  c.fp = fp;
  c.fn = fn;
  c.id_switches = id_switches;
  if (gt > 0) {
    const double g = static_cast<double>(gt);
    c.mota = 1.0 - static_cast<double>(fp + fn + id_switches) / g;
    c.moda = 1.0 - static_cast<double>(fp + fn) / g;
  }
  return c;
}

ClearMetrics evaluate_clear(const std::vector<EvalSequence>& seqs, const EvalConfig& cfg,
                            double confidence_threshold) {
  cfg.validate();
  return to_clear(accumulate(seqs, cfg, confidence_threshold));
}

AmotaResult amota_family(const std::vector<EvalSequence>& seqs, const EvalConfig& cfg) {
  cfg.validate();
  const auto thresholds = candidate_thresholds(seqs);
  std::vector<Accumulator> accs;
  accs.reserve(thresholds.size());
  for (double t : thresholds) accs.push_back(accumulate(seqs, cfg, t));

  AmotaResult out;
  const int L = cfg.recall_steps;
  for (int j = 1; j <= L; ++j) {
    RecallRow row;
    row.target_recall = static_cast<double>(j) / L;
    for (std::size_t k = 0; k < thresholds.size(); ++k) {
      const Accumulator& a = accs[k];
      if (a.gt == 0) break;
      const double recall = static_cast<double>(a.tp) / static_cast<double>(a.gt);
      if (recall + 1e-12 < row.target_recall) continue;
      const double g = static_cast<double>(a.gt);
      const double errors = static_cast<double>(a.fp + a.fn + a.ids);
      const double r = row.target_recall;
      row.reached = true;
      row.threshold = thresholds[k];
      row.achieved_recall = recall;
      row.mota = 1.0 - errors / g;
      row.smota = std::clamp(1.0 - (errors - (1.0 - r) * g) / (r * g), 0.0, 1.0);
      row.motp = a.tp > 0 ? a.iou_sum / static_cast<double>(a.tp) : 0.0;
      break;
    }
    if (row.reached) {
      out.amota += row.mota;
      out.samota += row.smota;
      out.amotp += row.motp;
    }
    out.table.push_back(row);
  }
  out.amota /= L;
  out.samota /= L;
  out.amotp /= L;
  return out;
}

MetricReport evaluate(const std::vector<EvalSequence>& seqs, const EvalConfig& cfg) {
  cfg.validate();
  MetricReport rep;
  rep.unfiltered = to_clear(accumulate(seqs, cfg, -std::numeric_limits<double>::infinity()));
  rep.clear = rep.unfiltered;
  if (cfg.confidence_sweep) {
    for (double t : candidate_thresholds(seqs)) {
      ClearMetrics c = to_clear(accumulate(seqs, cfg, t));
      if (c.mota && (!rep.clear.mota || *c.mota > *rep.clear.mota)) {
        rep.clear = c;
        rep.best_threshold = t;
      }
    }
  }
  rep.amota = amota_family(seqs, cfg);
  return rep;
}

std::string axis_name(SweepAxis axis) {
  return axis == SweepAxis::kMinPointsValid ? "min_points_valid" : "iou_threshold";
}

std::vector<SweepRow> sweep(const std::vector<EvalSequence>& seqs, const EvalConfig& base,
                            SweepAxis axis, const std::vector<double>& values) {
  if (values.empty()) throw ValidationError("sweep needs at least one value");
  std::vector<SweepRow> rows;
  for (double v : values) {
    EvalConfig cfg = base;
    if (axis == SweepAxis::kMinPointsValid) {
      cfg.min_points_valid = static_cast<int>(std::lround(v));
    } else {
      cfg.iou_threshold = v;
    }
    rows.push_back({v, evaluate(seqs, cfg)});
  }
  return rows;
}

namespace {

nlohmann::json opt(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json clear_json(const ClearMetrics& c) {
  return {{"mota", opt(c.mota)},
          {"moda", opt(c.moda)},
          {"mt", opt(c.mt)},
          {"ml", opt(c.ml)},
          {"motp", opt(c.motp)},
          {"gt", c.gt},
          {"tp", c.tp},
          {"fp", c.fp},
          {"fn", c.fn},
          {"id_switches", c.id_switches},
          {"trajectories", c.trajectories},
          {"mostly_tracked", c.mostly_tracked},
          {"mostly_lost", c.mostly_lost}};
}

std::string csv_opt(const std::optional<double>& v) {
  return v ? core::format_fixed(*v) : std::string("nan");
}

}  // namespace

nlohmann::json report_to_json(const MetricReport& r) {
  nlohmann::json j;
  j["mota"] = opt(r.clear.mota);
  j["moda"] = opt(r.clear.moda);
  j["mt"] = opt(r.clear.mt);
  j["ml"] = opt(r.clear.ml);
  j["samota"] = r.amota.samota;
  j["amota"] = r.amota.amota;
  j["amotp"] = r.amota.amotp;
  j["best_threshold"] = r.best_threshold;
  j["clear_best"] = clear_json(r.clear);
  j["clear_unfiltered"] = clear_json(r.unfiltered);
  nlohmann::json table = nlohmann::json::array();
  for (const auto& row : r.amota.table) {
    table.push_back({{"target_recall", row.target_recall},
                     {"reached", row.reached},
                     {"threshold", row.threshold},
                     {"achieved_recall", row.achieved_recall},
                     {"mota", row.mota},
                     {"smota", row.smota},
                     {"motp", row.motp}});
  }
  j["per_recall"] = table;
  return j;
}

std::string sweep_to_csv(SweepAxis axis, const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << axis_name(axis) << ",mota,moda,mt,ml,samota,amota,amotp,gt,id_switches\n";
  for (const auto& row : rows) {
    const auto& r = row.report;
    os << core::format_fixed(row.value) << ',' << csv_opt(r.clear.mota) << ','
       << csv_opt(r.clear.moda) << ',' << csv_opt(r.clear.mt) << ',' << csv_opt(r.clear.ml) << ','
       << core::format_fixed(r.amota.samota) << ',' << core::format_fixed(r.amota.amota) << ','
       << core::format_fixed(r.amota.amotp) << ',' << r.clear.gt << ',' << r.clear.id_switches
       << '\n';
  }
  return os.str();
}

namespace {

SequenceObjects parse_objects(std::istream& in, const std::string& source, const char* id_key) {
  std::map<std::int64_t, FrameObjects> frames;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ObjectInstance o;
      o.id = j.at(id_key).get<int>();
      o.points = j.at("point_indices").get<std::vector<int>>();
      o.confidence = j.value("confidence", 1.0);
      const auto idx = j.at("frame_index").get<std::int64_t>();
      auto& f = frames[idx];
      f.frame_index = idx;
      f.objects.push_back(std::move(o));
    } catch (const nlohmann::json::exception& e) {
      throw IoError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  SequenceObjects out;
  for (auto& [idx, f] : frames) out.frames.push_back(std::move(f));
  return out;
}

SequenceObjects load_objects(const std::filesystem::path& file, const char* id_key) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open " + file.string());
  return parse_objects(in, file.string(), id_key);
}

}  // namespace

SequenceObjects load_gt_jsonl(const std::filesystem::path& file) {
  return load_objects(file, "object_id");
}

SequenceObjects load_tracks_jsonl(const std::filesystem::path& file) {
  return load_objects(file, "track_id");
}

SequenceObjects parse_tracks_jsonl(const std::string& text) {
  std::istringstream in(text);
  return parse_objects(in, "<tracks>", "track_id");
}

std::string gt_to_jsonl(const SequenceObjects& gt) {
  std::string out;
  for (const auto& f : gt.frames) {
    for (const auto& o : f.objects) {
      nlohmann::json j;
      j["frame_index"] = f.frame_index;
      j["object_id"] = o.id;
      j["point_indices"] = o.points;
      out += j.dump();
      out += '\n';
    }
  }
  return out;
}

std::string svg_line_plot(const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<PlotSeries>& series) {
  constexpr double W = 640, H = 420, L = 70, R = 160, T = 40, B = 60;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    for (double x : s.x) xmin = std::min(xmin, x), xmax = std::max(xmax, x);
    for (double y : s.y)
      if (std::isfinite(y)) ymin = std::min(ymin, y), ymax = std::max(ymax, y);
  }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1;
  if (!std::isfinite(ymin)) ymin = 0, ymax = 1;
  ymin = std::min(ymin, 0.0);
  ymax = std::max(ymax, 1.0);
  if (xmax == xmin) xmax = xmin + 1;
  const auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  const auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title
     << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 5.0, yv = ymin + (ymax - ymin) * i / 5.0;
    os << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">"
       << core::format_fixed(xv, 2) << "</text>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">"
       << core::format_fixed(yv, 2) << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 18 << "\" text-anchor=\"middle\">"
     << x_label << "</text>\n";
  os << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
     << (T + H - B) / 2 << ")\">" << y_label << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* c = colors[k % 6];
    os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      os << core::format_fixed(px(s.x[i]), 2) << ',' << core::format_fixed(py(s.y[i]), 2) << ' ';
    }
    os << "\"/>\n";
    os << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * (k + 1) << "\" fill=\"" << c << "\">"
       << s.name << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace radmot::eval
