// SPDX-License-Identifier: Apache-2.0

#include "radmot/pipeline/config.hpp"

#include <yaml-cpp/yaml.h>

#include <array>
#include <fstream>
#include <set>
#include <sstream>

#include "radmot/common/errors.hpp"

namespace radmot::pipeline {

namespace {

// One YAML mapping; records which keys were consumed so leftovers can be rejected.
class Section {
 public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap())
      throw ValidationError("config: " + label() + " must be a mapping");
  }

  template <class T>
  void get(const std::string& key, T& out) {
    known_.insert(key);
    if (!present()) return;
    const YAML::Node v = node_[key];
    if (!v) return;
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      throw ValidationError("config: bad value for " + full(key));
    }
  }

  template <class T, std::size_t N>
  void get_array(const std::string& key, std::array<T, N>& out) {
    std::vector<T> v(out.begin(), out.end());
    get(key, v);
    if (v.size() != N)
      throw ValidationError("config: " + full(key) + " needs " + std::to_string(N) + " values");
    std::copy(v.begin(), v.end(), out.begin());
  }

  void get_vec3(const std::string& key, core::Vec3& out) {
    std::array<double, 3> a{out.x(), out.y(), out.z()};
    get_array(key, a);
    out = core::Vec3(a[0], a[1], a[2]);
  }

  Section sub(const std::string& key) {
    known_.insert(key);
    return Section(present() ? node_[key] : YAML::Node(), full(key));
  }

  void finish() const {
    if (!present()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!known_.count(key)) throw ValidationError("config: unknown key " + full(key));
    }
  }

 private:
  bool present() const { return node_ && node_.IsMap(); }
  std::string label() const { return path_.empty() ? "document" : path_; }
  std::string full(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  YAML::Node node_;
  std::string path_;
  std::set<std::string> known_;
};

void read_pfe(Section s, backbone::PfeConfig& p) {
  s.get_array("sa_radii", p.sa_radii);
  s.get_array("sa_neighbors", p.sa_neighbors);
  s.get_array("sa_channels", p.sa_channels);
  s.get_array("fp_channels", p.fp_channels);
  s.get("global_dim", p.global_dim);
  s.finish();
}

}  // namespace

std::string detector_name(DetectorKind k) {
  return k == DetectorKind::kLearned ? "learned" : "external";
}

std::string matcher_name(assoc::Matcher m) {
  switch (m) {
    case assoc::Matcher::kLearned: return "learned";
    case assoc::Matcher::kGreedy: return "greedy";
    case assoc::Matcher::kHungarian: return "hungarian";
  }
  return "learned";
}

void PipelineConfig::validate() const {
  model.validate();
  loss.validate();
  schedule.validate();
  eval.validate();
  synthetic.scene.validate();
  if (synthetic.sequences < 0) throw ValidationError("synthetic.sequences must be >= 0");
}

PipelineConfig parse_config(const std::string& yaml_text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ValidationError("config " + source + ": " + e.what());
  }
  PipelineConfig c;
  Section top(root, "");
  top.get("seed", c.seed);

  {
    Section a = top.sub("ablation");
    bool no_motion = !c.model.use_motion_module, no_velocity = !c.model.use_velocity;
    std::string detector = detector_name(c.detector), matcher = matcher_name(c.model.assoc.matcher);
    a.get("disable_motion_module", no_motion);
    a.get("disable_velocity_features", no_velocity);
    a.get("detector", detector);
    a.get("matcher", matcher);
    a.get("cheat_mode", c.cheat_mode);
    a.finish();
    c.model.use_motion_module = !no_motion;
    c.model.use_velocity = !no_velocity;
    if (detector == "learned") {
      c.detector = DetectorKind::kLearned;
    } else if (detector == "external") {
      c.detector = DetectorKind::kExternal;
    } else {
      throw ValidationError("config: ablation.detector must be learned or external");
    }
    if (matcher == "learned") {
      c.model.assoc.matcher = assoc::Matcher::kLearned;
    } else if (matcher == "greedy") {
      c.model.assoc.matcher = assoc::Matcher::kGreedy;
    } else if (matcher == "hungarian") {
      c.model.assoc.matcher = assoc::Matcher::kHungarian;
    } else {
      throw ValidationError("config: ablation.matcher must be learned, greedy or hungarian");
    }
  }

  read_pfe(top.sub("backbone"), c.model.pfe);
  {
    Section s = top.sub("cost_volume");
    s.get("k_neighbors", c.model.cost.k_neighbors);
    s.get("out_dim", c.model.cost.out_dim);
    s.get("include_current_features", c.model.cost.include_current_features);
    s.finish();
  }
  {
    Section s = top.sub("motion");
    read_pfe(s.sub("encoder"), c.model.flow.pfe);
    s.get("head_hidden", c.model.flow.head_hidden);
    s.get("max_gap", c.model.flow.max_gap);
    s.finish();
  }
  {
    Section s = top.sub("detector");
    auto& d = c.model.detect;
    s.get("zeta_mov", d.zeta_mov);
    s.get("dbscan_eps", d.dbscan_eps);
    s.get("dbscan_min_points", d.dbscan_min_points);
    s.get("position_scale", d.position_scale);
    s.get("flow_scale", d.flow_scale);
    s.get("embedding_scale", d.embedding_scale);
    s.get("embedding_channels", d.embedding_channels);
    s.get("classifier_hidden", d.classifier_hidden);
    s.finish();
  }
  {
    Section s = top.sub("associator");
    auto& a = c.model.assoc;
    s.get("affinity_hidden", a.affinity_hidden);
    s.get("sinkhorn_iterations", a.sinkhorn_iterations);
    s.get("temperature", a.temperature);
    s.get("match_threshold", a.match_threshold);
    s.get("new_track_confidence", a.new_track_confidence);
    s.get("max_missed_frames", a.max_missed_frames);
    s.get("descriptor_embedding", a.descriptor_embedding);
    s.get("baseline_max_distance", a.baseline_max_distance);
    s.finish();
  }
  {
    Section s = top.sub("loss");
    s.get("alpha_flow", c.loss.alpha_flow);
    s.get("alpha_seg", c.loss.alpha_seg);
    s.get("alpha_aff", c.loss.alpha_aff);
    s.get("beta", c.loss.beta);
    s.get("log_epsilon", c.loss.log_epsilon);
    s.get("motion_label_threshold", c.loss.motion_label_threshold);
    s.finish();
  }
  {
    Section s = top.sub("schedule");
    s.get("stage1_epochs", c.schedule.stage1_epochs);
    s.get("stage1_lr", c.schedule.stage1_lr);
    s.get("stage2_epochs", c.schedule.stage2_epochs);
    s.get("stage2_lr", c.schedule.stage2_lr);
    s.get("lr_decay_per_epoch", c.schedule.lr_decay_per_epoch);
    s.finish();
  }
  {
    Section s = top.sub("evaluation");
    s.get("iou_threshold", c.eval.iou_threshold);
    s.get("min_points_valid", c.eval.min_points_valid);
    s.get("recall_steps", c.eval.recall_steps);
    s.get("confidence_sweep", c.eval.confidence_sweep);
    s.finish();
  }
  {
    Section s = top.sub("synthetic");
    auto& sc = c.synthetic.scene;
    s.get("sequences", c.synthetic.sequences);
    s.get("n_objects", sc.n_objects);
    s.get("points_per_object", sc.points_per_object);
    s.get("n_static", sc.n_static);
    s.get("speed_min", sc.speed_min);
    s.get("speed_max", sc.speed_max);
    s.get("noise_sigma", sc.noise_sigma);
    s.get("rrv_noise_sigma", sc.rrv_noise_sigma);
    s.get("fps", sc.fps);
    s.get("n_frames", sc.n_frames);
    s.get("seed", sc.rng_seed);
    s.get_vec3("ego_velocity", sc.ego_velocity);
    s.get("ego_yaw", sc.ego_yaw);
    s.get("lane_spacing", sc.lane_spacing);
    s.get("alternate_directions", sc.alternate_directions);
    s.get("static_clearance", sc.static_clearance);
    s.finish();
  }
  top.finish();
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open config " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), file.string());
}

}  // namespace radmot::pipeline
