// SPDX-License-Identifier: Apache-2.0

#include "radmot/pipeline/runner.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <cmath>
#include <set>
#include <sstream>

#include "radmot/common/errors.hpp"
#include "radmot/common/parallel.hpp"
#include "radmot/core/sequence_io.hpp"
#include "radmot/core/synthetic.hpp"
#include "radmot/train/labels.hpp"
#include "radmot/train/toy_problem.hpp"

namespace radmot::pipeline {

void write_text(const fs::path& file, const std::string& text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  out << text;
  if (!out) throw IoError("failed writing " + file.string());
}

std::vector<fs::path> list_sequences(const fs::path& data_dir) {
  if (!fs::is_directory(data_dir)) throw IoError("data directory not found: " + data_dir.string());
  if (fs::exists(data_dir / "meta.json")) return {data_dir};
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(data_dir))
    if (e.is_directory() && fs::exists(e.path() / "meta.json")) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

eval::SequenceObjects load_ground_truth(const fs::path& seq_dir) {
  if (fs::exists(seq_dir / "gt_objects.jsonl")) return eval::load_gt_jsonl(seq_dir / "gt_objects.jsonl");
  const auto seq = core::load_sequence(seq_dir);
  eval::SequenceObjects gt;
  for (const auto& sf : seq.frames)
    gt.frames.push_back(
        eval::objects_from_labels(sf.frame.frame_index, train::box_membership(sf.frame, sf.boxes)));
  return gt;
}

void run_synth(const PipelineConfig& cfg, const fs::path& out_dir, const SynthOptions& opt) {
  fs::create_directories(out_dir);
  const int n = cfg.synthetic.sequences;
  parallel_for(static_cast<std::size_t>(n), opt.jobs, [&](std::size_t i) {
    core::SyntheticSceneConfig scene = cfg.synthetic.scene;
    scene.rng_seed = cfg.synthetic.scene.rng_seed + i;
    const auto syn = core::generate_synthetic_sequence(scene);
    char name[32];
    std::snprintf(name, sizeof name, "seq_%03zu", i);
    const fs::path dir = out_dir / name;
    core::save_sequence(syn.sequence, dir);
    eval::SequenceObjects gt;
    for (std::size_t t = 0; t < syn.truth.size(); ++t) {
      const auto& frame = syn.sequence.frames[t].frame;
      gt.frames.push_back(eval::objects_from_labels(frame.frame_index, syn.truth[t].object_id));
      std::string csv = "flow_x,flow_y,flow_z,moving,object_id\n";
      const auto& tr = syn.truth[t];
      for (std::size_t p = 0; p < frame.size(); ++p) {
        csv += core::format_fixed(tr.flow(p, 0)) + ',' + core::format_fixed(tr.flow(p, 1)) + ',' +
               core::format_fixed(tr.flow(p, 2)) + ',' + std::to_string(tr.motion_mask[p]) + ',' +
               std::to_string(tr.object_id[p]) + '\n';
      }
      write_text(dir / "gt_points" / core::frame_file_name(frame.frame_index), csv);
    }
    write_text(dir / "gt_objects.jsonl", eval::gt_to_jsonl(gt));
  });
  spdlog::info("wrote {} synthetic sequences to {}", n, out_dir.string());
}

TrackerOptions tracker_options(const PipelineConfig& cfg) {
  TrackerOptions o;
  o.detector = cfg.detector;
  o.cheat_mode = cfg.cheat_mode;
  o.motion_label_threshold = cfg.loss.motion_label_threshold;
  return o;
}

std::string track_sequence(const model::Network& net, const nn::WeightStore& weights,
                           const core::Sequence& seq, const TrackerOptions& options,
                           std::vector<TrackerFrame>* frames) {
  Tracker tracker(net, weights, options);
  std::string out;
  for (const auto& sf : seq.frames) {
    TrackerFrame f = tracker.step(sf);
    out += f.records;
    if (frames) frames->push_back(std::move(f));
  }
  return out;
}

TrackSummary run_track(const PipelineConfig& cfg, const std::optional<fs::path>& weights_file,
                       const fs::path& data_dir, const fs::path& out_dir, const TrackOptions& opt) {
  const model::Network net(cfg.model);
  nn::WeightStore weights;
  if (weights_file) {
    weights = nn::WeightStore::load(*weights_file);
    net.check_weights(weights);
  } else {
    weights = nn::WeightStore::zeros(net.specs(), cfg.model.manifest());
    if (!cfg.cheat_mode) spdlog::warn("no weights given; the network starts from zeros");
  }
  const auto seqs = list_sequences(data_dir);
  const auto options = tracker_options(cfg);
  std::vector<TrackSummary> per(seqs.size());
  parallel_for(seqs.size(), opt.jobs, [&](std::size_t i) {
    const auto seq = core::load_sequence(seqs[i]);
    std::vector<TrackerFrame> frames;
    const std::string records = track_sequence(net, weights, seq, options, &frames);
    const fs::path dir = out_dir / seqs[i].filename();
    write_text(dir / "tracks.jsonl", records);
    per[i].sequences = 1;
    per[i].frames = frames.size();
    for (const auto& f : frames) per[i].detections += f.detections;
    std::set<long> ids;
    for (std::istringstream in(records); !in.eof();) {
      std::string line;
      std::getline(in, line);
      if (!line.empty()) ids.insert(nlohmann::json::parse(line).at("track_id").get<long>());
    }
    per[i].tracks_created = ids.size();
    if (opt.write_timing) {
      std::string csv = "frame_index,network_ms,detection_ms,association_ms,total_ms\n";
      for (const auto& f : frames) {
        csv += std::to_string(f.timing.frame_index) + ',' + core::format_fixed(f.timing.network_ms, 3) +
               ',' + core::format_fixed(f.timing.detection_ms, 3) + ',' +
               core::format_fixed(f.timing.association_ms, 3) + ',' +
               core::format_fixed(f.timing.total_ms, 3) + '\n';
      }
      write_text(dir / "timing.csv", csv);
    }
    if (opt.dump_flow) {
      for (const auto& f : frames) {
        std::string csv = "flow_x,flow_y,flow_z\n";
        for (std::size_t p = 0; p < f.flow.rows(); ++p)
          csv += core::format_fixed(f.flow(p, 0)) + ',' + core::format_fixed(f.flow(p, 1)) + ',' +
                 core::format_fixed(f.flow(p, 2)) + '\n';
        write_text(dir / "flow" / core::frame_file_name(f.frame_index), csv);
      }
    }
  });
  TrackSummary total;
  for (const auto& p : per) {
    total.sequences += p.sequences;
    total.frames += p.frames;
    total.detections += p.detections;
    total.tracks_created += p.tracks_created;
  }
  const nlohmann::json j{{"sequences", total.sequences},
                         {"frames", total.frames},
                         {"detections", total.detections},
                         {"tracks", total.tracks_created},
                         {"cheat_mode", cfg.cheat_mode},
                         {"detector", detector_name(cfg.detector)},
                         {"matcher", matcher_name(cfg.model.assoc.matcher)},
                         {"disable_motion_module", !cfg.model.use_motion_module},
                         {"disable_velocity_features", !cfg.model.use_velocity}};
  write_text(out_dir / "summary.json", j.dump(2) + "\n");
  spdlog::info("tracked {} sequences ({} frames, {} detections)", total.sequences, total.frames,
               total.detections);
  return total;
}

std::vector<eval::EvalSequence> load_eval_set(const fs::path& data_dir, const fs::path& tracks_dir,
                                              int jobs) {
  const auto seqs = list_sequences(data_dir);
  std::vector<eval::EvalSequence> out(seqs.size());
  parallel_for(seqs.size(), jobs, [&](std::size_t i) {
    out[i].name = seqs[i].filename().string();
    out[i].gt = load_ground_truth(seqs[i]);
    const fs::path tracks = tracks_dir / seqs[i].filename() / "tracks.jsonl";
    if (fs::exists(tracks)) {
      out[i].pred = eval::load_tracks_jsonl(tracks);
    } else if (seqs.size() == 1 && fs::exists(tracks_dir / "tracks.jsonl")) {
      out[i].pred = eval::load_tracks_jsonl(tracks_dir / "tracks.jsonl");
    } else {
      spdlog::warn("no tracks for {}; treating predictions as empty", out[i].name);
    }
  });
  return out;
}

eval::MetricReport run_eval(const PipelineConfig& cfg, const fs::path& data_dir,
                            const fs::path& tracks_dir, const fs::path& out_dir, int jobs) {
  const auto set = load_eval_set(data_dir, tracks_dir, jobs);
  const auto report = eval::evaluate(set, cfg.eval);
  nlohmann::json j = eval::report_to_json(report);
  j["sequences"] = set.size();
  j["iou_threshold"] = cfg.eval.iou_threshold;
  j["min_points_valid"] = cfg.eval.min_points_valid;
  write_text(out_dir / "metrics.json", j.dump(2) + "\n");

  std::ostringstream csv;
  csv << "target_recall,reached,threshold,achieved_recall,mota,smota,motp\n";
  eval::PlotSeries mota{"MOTA", {}, {}}, smota{"sMOTA", {}, {}}, motp{"MOTP", {}, {}};
  for (const auto& r : report.amota.table) {
    csv << core::format_fixed(r.target_recall) << ',' << (r.reached ? 1 : 0) << ','
        << core::format_fixed(r.threshold) << ',' << core::format_fixed(r.achieved_recall) << ','
        << core::format_fixed(r.mota) << ',' << core::format_fixed(r.smota) << ','
        << core::format_fixed(r.motp) << '\n';
    for (auto* s : {&mota, &smota, &motp}) s->x.push_back(r.target_recall);
    mota.y.push_back(r.mota);
    smota.y.push_back(r.smota);
    motp.y.push_back(r.motp);
  }
  write_text(out_dir / "sweep.csv", csv.str());
  write_text(out_dir / "recall_sweep.svg",
             eval::svg_line_plot("Scores over the recall sweep", "recall", "score",
                                 {mota, smota, motp}));
  const auto fmt = [](const std::optional<double>& v) {
    return v ? core::format_fixed(*v, 4) : std::string("undefined");
  };
  spdlog::info("MOTA {} MODA {} sAMOTA {} AMOTA {} AMOTP {}", fmt(report.clear.mota),
               fmt(report.clear.moda), core::format_fixed(report.amota.samota, 4),
               core::format_fixed(report.amota.amota, 4), core::format_fixed(report.amota.amotp, 4));
  return report;
}

std::vector<eval::SweepRow> run_sweep(const PipelineConfig& cfg, const fs::path& data_dir,
                                      const fs::path& tracks_dir, const fs::path& out_dir,
                                      eval::SweepAxis axis, const std::vector<double>& values,
                                      int jobs) {
  const auto set = load_eval_set(data_dir, tracks_dir, jobs);
  const auto rows = eval::sweep(set, cfg.eval, axis, values);
  const std::string name = eval::axis_name(axis);
  write_text(out_dir / ("sweep_" + name + ".csv"), eval::sweep_to_csv(axis, rows));
  std::vector<eval::PlotSeries> series{{"sAMOTA", {}, {}}, {"AMOTA", {}, {}}, {"MOTA", {}, {}}};
  for (const auto& r : rows) {
    for (auto& s : series) s.x.push_back(r.value);
    series[0].y.push_back(r.report.amota.samota);
    series[1].y.push_back(r.report.amota.amota);
    series[2].y.push_back(r.report.clear.mota ? *r.report.clear.mota : std::nan(""));
  }
  write_text(out_dir / ("sweep_" + name + ".svg"),
             eval::svg_line_plot("Scores over " + name, name, "score", series));
  return rows;
}

train::TrainResult run_train(const PipelineConfig& cfg, const fs::path& data_dir,
                             const fs::path& out_dir, const TrainRunOptions& opt) {
  const model::Network net(cfg.model);
  std::vector<core::Sequence> seqs;
  for (const auto& dir : list_sequences(data_dir)) seqs.push_back(core::load_sequence(dir));
  if (seqs.empty()) throw IoError("no sequences under " + data_dir.string());

  train::TrainSchedule schedule = cfg.schedule;
  nn::WeightStore initial;
  if (opt.resume_stage1) {
    initial = nn::WeightStore::load(*opt.resume_stage1);
    net.check_weights(initial);
    schedule.stage1_epochs = 0;
  } else {
    initial = net.init_weights(cfg.seed);
  }
  fs::create_directories(out_dir);
  train::TrainOptions topt;
  topt.on_epoch = [](const train::EpochSummary& e, const nn::WeightStore&) {
    spdlog::info("stage {} epoch {}: L_flow {:.5f} L_seg {:.5f} L_aff {:.5f} L_total {:.5f} lr {:.6f}",
                 e.stage, e.epoch, e.mean.flow, e.mean.seg, e.mean.aff, e.mean_total, e.lr);
  };
  topt.on_stage1_done = [&](const nn::WeightStore& w) {
    if (!opt.resume_stage1) w.save(out_dir / "stage1.rmw");
  };
  auto result = train::train(net, std::move(initial), seqs, schedule, cfg.loss, topt);
  result.weights.save(out_dir / "final.rmw");
  write_text(out_dir / "train_log.csv", train::log_to_csv(result.log));
  return result;
}

train::GradCheckReport run_grad_check(const PipelineConfig& cfg, std::size_t entries_per_tensor) {
  const model::Network net(cfg.model);
  const auto w = net.init_weights(cfg.seed);
  const train::ToyProblem toy(cfg.model, w, 5, cfg.loss);
  train::GradCheckOptions opts;
  opts.max_entries_per_tensor = entries_per_tensor;
  opts.seed = cfg.seed;
  return train::grad_check(w, toy.loss_fn(2), opts);
}

}  // namespace radmot::pipeline
