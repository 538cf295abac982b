// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "radmot/core/radar_types.hpp"

namespace radmot::core {

// Directory layout:
//   frames/NNNNNN.csv   x,y,z,v_r,v_c per row, 6-decimal fixed point
//   poses.csv           12 values per row (row-major 3x4 world <- sensor), one row per frame
//   annotations.jsonl   {"center","dims","yaw","track_id","frame_index"} per line
//   meta.json           {"fps","sensor_id"}
// Timestamps are frame_index / fps.

Sequence load_sequence(const std::filesystem::path& dir);
void save_sequence(const Sequence& seq, const std::filesystem::path& dir);

/// Fixed-point formatting used by every text artifact ("%.6f").
std::string format_fixed(double v, int decimals = 6);

/// Parses one comma-separated row of doubles; throws IoError naming `source` on failure.
std::vector<double> parse_csv_row(const std::string& line, const std::string& source);

std::string frame_file_name(std::int64_t frame_index);

}  // namespace radmot::core
