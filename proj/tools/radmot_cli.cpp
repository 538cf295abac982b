// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: track, train, eval, synth, grad-check and sweep.
// Exit codes: 0 success, 1 validation error, 2 runtime error, 3 divergence.

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>
#include <optional>

#include "radmot/common/errors.hpp"
#include "radmot/core/sequence_io.hpp"
#include "radmot/pipeline/runner.hpp"

namespace fs = std::filesystem;
using namespace radmot;
using namespace radmot::pipeline;

namespace {

void configure_logging() {
  const char* level = std::getenv("RADMOT_LOG_LEVEL");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::info);
  spdlog::set_pattern("[%l] %v");
}

PipelineConfig load(const std::string& path, bool cheat) {
  PipelineConfig cfg = path.empty() ? PipelineConfig{} : load_config(path);
  if (cheat) cfg.cheat_mode = true;
  cfg.validate();
  return cfg;
}

eval::SweepAxis parse_axis(const std::string& s) {
  if (s == "min_points_valid") return eval::SweepAxis::kMinPointsValid;
  if (s == "iou_threshold") return eval::SweepAxis::kIouThreshold;
  throw ValidationError("sweep axis must be min_points_valid or iou_threshold");
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Moving-object detection and tracking on 4D radar point clouds"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  int jobs = 1;
  app.add_option("-c,--config", config_path, "YAML configuration file")->check(CLI::ExistingFile);
  app.add_option("-j,--jobs", jobs, "Worker threads across sequences")->check(CLI::PositiveNumber);

  auto* track = app.add_subcommand("track", "Run the tracker over every sequence of a data directory");
  std::string data_dir, out_dir, weights, tracks_dir, resume;
  bool cheat = false, timing = false, dump_flow = false;
  track->add_option("--data", data_dir, "Sequence directory or a parent of sequences")->required();
  track->add_option("--out", out_dir, "Output directory")->required();
  track->add_option("--weights", weights, "Weight file (.rmw)");
  track->add_flag("--cheat-mode", cheat, "Use ground-truth mask, flow and geometric affinity");
  track->add_flag("--timing", timing, "Write per-frame timing.csv");
  track->add_flag("--dump-flow", dump_flow, "Write per-frame flow CSVs");

  auto* train = app.add_subcommand("train", "Two-stage training");
  train->add_option("--data", data_dir, "Training sequences")->required();
  train->add_option("--out", out_dir, "Checkpoint and log directory")->required();
  train->add_option("--resume-stage1", resume, "Stage-1 checkpoint; skips stage 1");

  auto* ev = app.add_subcommand("eval", "Score track output against ground truth");
  ev->add_option("--data", data_dir, "Ground-truth sequences")->required();
  ev->add_option("--tracks", tracks_dir, "Directory written by track")->required();
  ev->add_option("--out", out_dir, "Report directory")->required();

  auto* synth = app.add_subcommand("synth", "Generate synthetic sequences");
  synth->add_option("--out", out_dir, "Output directory")->required();
  std::optional<int> sequences;
  synth->add_option("--sequences", sequences, "Overrides synthetic.sequences");

  auto* gc = app.add_subcommand("grad-check", "Finite-difference check of every tensor gradient");
  std::size_t entries = 6;
  double tol = 1e-3;
  gc->add_option("--entries", entries, "Entries sampled per tensor");
  gc->add_option("--tol", tol, "Maximum relative error");

  auto* sw = app.add_subcommand("sweep", "Evaluate over a range of one evaluation setting");
  std::string axis;
  std::vector<double> values;
  sw->add_option("--data", data_dir, "Ground-truth sequences")->required();
  sw->add_option("--tracks", tracks_dir, "Directory written by track")->required();
  sw->add_option("--out", out_dir, "Report directory")->required();
  sw->add_option("--axis", axis, "min_points_valid or iou_threshold")->required();
  sw->add_option("--values", values, "Values to evaluate")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const PipelineConfig cfg = load(config_path, cheat);
    if (*track) {
      TrackOptions opt;
      opt.jobs = jobs;
      opt.write_timing = timing;
      opt.dump_flow = dump_flow;
      run_track(cfg, weights.empty() ? std::nullopt : std::optional<fs::path>(weights), data_dir,
                out_dir, opt);
    } else if (*train) {
      TrainRunOptions opt;
      if (!resume.empty()) opt.resume_stage1 = resume;
      run_train(cfg, data_dir, out_dir, opt);
    } else if (*ev) {
      run_eval(cfg, data_dir, tracks_dir, out_dir, jobs);
    } else if (*synth) {
      PipelineConfig c = cfg;
      if (sequences) c.synthetic.sequences = *sequences;
      c.validate();
      run_synth(c, out_dir, {jobs});
    } else if (*gc) {
      const auto r = run_grad_check(cfg, entries);
      for (const auto& t : r.per_tensor)
        std::cout << t.tensor << ' ' << core::format_fixed(t.rel_error, 8) << '\n';
      std::cout << "max relative error " << r.max_rel_error << " over " << r.entries_checked
                << " entries (" << r.refined_entries << " refined) in " << r.worst.tensor << '\n';
      for (const auto& n : r.non_finite) std::cout << "non-finite gradient in " << n << '\n';
      if (!r.ok(tol)) {
        spdlog::error("gradient check failed: {} > {}", r.max_rel_error, tol);
        return 2;
      }
    } else if (*sw) {
      run_sweep(cfg, data_dir, tracks_dir, out_dir, parse_axis(axis), values, jobs);
    }
  } catch (const ValidationError& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const DivergenceError& e) {
    spdlog::error("training diverged at stage {} epoch {} step {}: {}", e.stage(), e.epoch(),
                  e.step(), e.what());
    return 3;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 0;
}
