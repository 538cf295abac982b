// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>

#include "radmot/core/synthetic.hpp"
#include "radmot/model/network.hpp"
#include "radmot/train/grad_check.hpp"
#include "radmot/train/trainer.hpp"

namespace radmot::train {

/// Three-frame scene with 16 points per frame: two moving 4-point objects and
/// eight static points, seen from a moving sensor.
core::SyntheticSequence toy_scene(std::uint64_t seed = 5);

/// Composite objective on frames (1, 2) of the toy scene. Track descriptors
/// come from a gradient-free pass over frames (0, 1) with the given weights.
class ToyProblem {
 public:
  ToyProblem(const model::ModelConfig& cfg, const nn::WeightStore& weights,
             std::uint64_t scene_seed = 5, LossConfig loss = {});

  const model::Network& network() const { return *net_; }
  const PairBatch& batch() const { return batch_; }
  /// Each evaluation starts from the same recurrent state.
  LossFn loss_fn(int stage = 2) const;

 private:
  core::SyntheticSequence scene_;
  std::unique_ptr<model::Network> net_;
  PairBatch batch_;
  motion::GruState gru_;
  LossConfig loss_;
};

}  // namespace radmot::train
