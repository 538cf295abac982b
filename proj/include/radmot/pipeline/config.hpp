// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "radmot/core/synthetic.hpp"
#include "radmot/eval/evaluator.hpp"
#include "radmot/model/network.hpp"
#include "radmot/train/losses.hpp"
#include "radmot/train/trainer.hpp"

namespace radmot::pipeline {

enum class DetectorKind { kLearned, kExternal };

struct SyntheticSetConfig {
  int sequences = 20;
  /// Sequence i uses scene.rng_seed + i.
  core::SyntheticSceneConfig scene;
};

/// Every tunable of the pipeline. Defaults reproduce the published settings.
struct PipelineConfig {
  std::uint64_t seed = 0;  // weight initialisation
  model::ModelConfig model;
  DetectorKind detector = DetectorKind::kLearned;
  bool cheat_mode = false;
  train::LossConfig loss;
  train::TrainSchedule schedule;
  eval::EvalConfig eval;
  SyntheticSetConfig synthetic;

  void validate() const;
};

/// Parses YAML text. Missing keys keep their defaults; unknown keys and
/// ill-typed values throw ValidationError naming the full key path.
PipelineConfig parse_config(const std::string& yaml_text, const std::string& source = "<string>");
PipelineConfig load_config(const std::filesystem::path& file);

std::string detector_name(DetectorKind k);
std::string matcher_name(assoc::Matcher m);

}  // namespace radmot::pipeline
