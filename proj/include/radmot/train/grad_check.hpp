// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "radmot/nn/weight_store.hpp"

namespace radmot::train {

/// Returns the loss for `w`; when `g` is non-null also accumulates dL/dw into it.
using LossFn = std::function<double(const nn::WeightStore& w, nn::GradientStore* g)>;

struct GradCheckOptions {
  double step = 1e-4;
  /// Entries sampled per tensor; 0 checks every entry.
  std::size_t max_entries_per_tensor = 0;
  std::uint64_t seed = 0;
  /// Denominator floor of the relative error, so entries whose true gradient is
  /// ~0 are compared absolutely.
  double floor = 1e-6;
  /// An entry whose error exceeds `refine_above` is re-measured with steps
  /// step/10, step/100, ... (up to `refinements` times) and keeps the smallest
  /// error. This separates max-pool and rectifier kinks lying inside the
  /// stencil from real gradient mistakes, which persist at every step.
  int refinements = 2;
  double refine_above = 1e-3;
  /// Restricts the check to tensors for which this returns true (all when empty).
  std::function<bool(const std::string&)> include;
};

struct TensorGradError {
  std::string tensor;
  std::size_t entry = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  TensorGradError worst;
  std::size_t entries_checked = 0;
  /// Entries whose error only fell under `refine_above` at a finer step.
  std::size_t refined_entries = 0;
  /// Tensors whose analytic gradient contains a non-finite value.
  std::vector<std::string> non_finite;
  /// Largest error per tensor, in name order.
  std::vector<TensorGradError> per_tensor;

  bool ok(double tol) const { return non_finite.empty() && max_rel_error <= tol; }
};

/// Central-difference check of every selected tensor's analytic gradient.
GradCheckReport grad_check(const nn::WeightStore& weights, const LossFn& loss,
                           const GradCheckOptions& opts = {});

}  // namespace radmot::train
