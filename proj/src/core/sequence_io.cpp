// SPDX-License-Identifier: Apache-2.0

#include "radmot/core/sequence_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "radmot/common/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace radmot::core {

std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::string frame_file_name(std::int64_t frame_index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06lld.csv", static_cast<long long>(frame_index));
  return buf;
}

std::vector<double> parse_csv_row(const std::string& line, const std::string& source) {
  std::vector<double> out;
  const char* p = line.data();
  const char* end = line.data() + line.size();
  while (p < end) {
    while (p < end && (*p == ' ' || *p == '\t')) ++p;
    double v = 0.0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc()) throw IoError(source + ": cannot parse number in '" + line + "'");
    out.push_back(v);
    p = next;
    while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
    if (p < end) {
      if (*p != ',') throw IoError(source + ": unexpected character in '" + line + "'");
      ++p;
    }
  }
  return out;
}

namespace {

std::vector<std::string> read_lines(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open " + file.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    lines.push_back(line);
  }
  if (in.bad()) throw IoError("read failure on " + file.string());
  return lines;
}

std::vector<RadarPoint> read_points(const fs::path& file) {
  std::vector<RadarPoint> points;
  for (const auto& line : read_lines(file)) {
    const auto v = parse_csv_row(line, file.string());
    if (v.size() != 5) throw IoError(file.string() + ": expected 5 columns, got " +
                                     std::to_string(v.size()));
    RadarPoint p;
    p.position = Vec3(v[0], v[1], v[2]);
    p.rrv = v[3];
    p.rrv_compensated = v[4];
    points.push_back(p);
  }
  return points;
}

json vec_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from_json(const json& j, const std::string& source) {
  if (!j.is_array() || j.size() != 3) throw IoError(source + ": expected a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  out << text;
  if (!out) throw IoError("write failure on " + file.string());
}

}  // namespace

Sequence load_sequence(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  Sequence seq;

  const fs::path meta_file = dir / "meta.json";
  if (fs::exists(meta_file)) {
    std::ifstream in(meta_file);
    if (!in) throw IoError("cannot open " + meta_file.string());
    try {
      const json j = json::parse(in);
      seq.meta.fps = j.value("fps", 10.0);
      seq.meta.sensor_id = j.value("sensor_id", std::string("radar"));
    } catch (const json::exception& e) {
      throw IoError(meta_file.string() + ": " + e.what());
    }
    if (!(seq.meta.fps > 0.0)) throw ValidationError(meta_file.string() + ": fps must be > 0");
  }

  // frame_index -> file
  std::map<std::int64_t, fs::path> frame_files;
  const fs::path frames_dir = dir / "frames";
  if (fs::is_directory(frames_dir)) {
    for (const auto& entry : fs::directory_iterator(frames_dir)) {
      if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
      const std::string stem = entry.path().stem().string();
      std::int64_t idx = 0;
      auto [ptr, ec] = std::from_chars(stem.data(), stem.data() + stem.size(), idx);
      if (ec != std::errc() || ptr != stem.data() + stem.size()) {
        throw IoError("unexpected frame file name: " + entry.path().string());
      }
      frame_files.emplace(idx, entry.path());
    }
  }
  if (frame_files.empty()) return seq;

  const fs::path pose_file = dir / "poses.csv";
  const auto pose_lines = read_lines(pose_file);
  if (pose_lines.size() != frame_files.size()) {
    throw IoError(pose_file.string() + ": " + std::to_string(pose_lines.size()) +
                  " pose rows for " + std::to_string(frame_files.size()) + " frames");
  }

  std::size_t row = 0;
  for (const auto& [idx, file] : frame_files) {
    SequenceFrame sf;
    sf.frame.frame_index = idx;
    sf.frame.timestamp = static_cast<double>(idx) / seq.meta.fps;
    sf.frame.points = read_points(file);
    const auto pv = parse_csv_row(pose_lines[row++], pose_file.string());
    if (pv.size() != 12) throw IoError(pose_file.string() + ": expected 12 values per row");
    sf.frame.ego_pose = RigidTransform::from_row_major(std::span<const double, 12>(pv.data(), 12));
    try {
      validate_frame(sf.frame);
    } catch (const ValidationError& e) {
      throw ValidationError(file.string() + ": " + e.what());
    }
    seq.frames.push_back(std::move(sf));
  }

  const fs::path ann_file = dir / "annotations.jsonl";
  if (fs::exists(ann_file)) {
    std::map<std::int64_t, std::size_t> slot;
    for (std::size_t i = 0; i < seq.frames.size(); ++i) slot[seq.frames[i].frame.frame_index] = i;
    for (const auto& line : read_lines(ann_file)) {
      BoxAnnotation b;
      try {
        const json j = json::parse(line);
        b.center = vec_from_json(j.at("center"), ann_file.string());
        b.dims = vec_from_json(j.at("dims"), ann_file.string());
        b.yaw = j.at("yaw").get<double>();
        b.track_id = j.at("track_id").get<int>();
        b.frame_index = j.at("frame_index").get<std::int64_t>();
      } catch (const json::exception& e) {
        throw IoError(ann_file.string() + ": " + e.what());
      }
      auto it = slot.find(b.frame_index);
      if (it == slot.end()) {
        throw ValidationError(ann_file.string() + ": annotation for unknown frame " +
                              std::to_string(b.frame_index));
      }
      seq.frames[it->second].boxes.push_back(b);
    }
  }
  validate_sequence(seq);
  return seq;
}

void save_sequence(const Sequence& seq, const fs::path& dir) {
  fs::create_directories(dir / "frames");
  {
    json meta{{"fps", seq.meta.fps}, {"sensor_id", seq.meta.sensor_id}};
    write_text(dir / "meta.json", meta.dump(2) + "\n");
  }
  std::string poses;
  std::string annotations;
  for (const auto& sf : seq.frames) {
    std::string text;
    text.reserve(sf.frame.points.size() * 56);
    for (const auto& p : sf.frame.points) {
      text += format_fixed(p.position.x()) + ',' + format_fixed(p.position.y()) + ',' +
              format_fixed(p.position.z()) + ',' + format_fixed(p.rrv) + ',' +
              format_fixed(p.rrv_compensated) + '\n';
    }
    write_text(dir / "frames" / frame_file_name(sf.frame.frame_index), text);

    const auto pose = sf.frame.ego_pose.to_row_major();
    for (std::size_t i = 0; i < pose.size(); ++i) {
      if (i) poses += ',';
      poses += format_fixed(pose[i], 12);
    }
    poses += '\n';

    for (const auto& b : sf.boxes) {
      json j{{"center", vec_to_json(b.center)},
             {"dims", vec_to_json(b.dims)},
             {"yaw", b.yaw},
             {"track_id", b.track_id},
             {"frame_index", b.frame_index}};
      annotations += j.dump() + '\n';
    }
  }
  write_text(dir / "poses.csv", poses);
  write_text(dir / "annotations.jsonl", annotations);
}

}  // namespace radmot::core
