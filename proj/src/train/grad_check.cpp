// SPDX-License-Identifier: Apache-2.0

#include "radmot/train/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace radmot::train {

GradCheckReport grad_check(const nn::WeightStore& weights, const LossFn& loss,
                           const GradCheckOptions& opts) {
  GradCheckReport report;
  nn::GradientStore analytic(weights);
  loss(weights, &analytic);

  nn::WeightStore probe = weights;
  std::mt19937_64 rng(opts.seed);
  for (auto& [name, tensor] : probe.tensors()) {
    if (opts.include && !opts.include(name)) continue;
    const auto& grad = analytic.at(name);
    if (!std::all_of(grad.begin(), grad.end(), [](double v) { return std::isfinite(v); })) {
      report.non_finite.push_back(name);
      continue;
    }
    std::vector<std::size_t> entries(tensor.size());
    std::iota(entries.begin(), entries.end(), 0);
    if (opts.max_entries_per_tensor > 0 && entries.size() > opts.max_entries_per_tensor) {
      std::shuffle(entries.begin(), entries.end(), rng);
      entries.resize(opts.max_entries_per_tensor);
      std::sort(entries.begin(), entries.end());
    }
    TensorGradError worst{name, 0, 0.0, 0.0, 0.0};
    for (std::size_t e : entries) {
      const double a = grad[e];
      const auto measure = [&](double h, double& numeric) {
        const double saved = tensor.values[e];
        tensor.values[e] = saved + h;
        const double up = loss(probe, nullptr);
        tensor.values[e] = saved - h;
        const double down = loss(probe, nullptr);
        tensor.values[e] = saved;
        numeric = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(a), std::abs(numeric), opts.floor});
        return std::abs(a - numeric) / denom;
      };
      double numeric = 0.0;
      double rel = measure(opts.step, numeric);
      double h = opts.step;
      for (int r = 0; r < opts.refinements && rel > opts.refine_above; ++r) {
        h /= 10.0;
        double n2 = 0.0;
        const double rel2 = measure(h, n2);
        if (rel2 < rel) rel = rel2, numeric = n2;
        if (rel <= opts.refine_above) ++report.refined_entries;
      }
      ++report.entries_checked;
      if (rel >= worst.rel_error) worst = {name, e, a, numeric, rel};
    }
    report.per_tensor.push_back(worst);
    if (worst.rel_error >= report.max_rel_error) {
      report.max_rel_error = worst.rel_error;
      report.worst = worst;
    }
  }
  return report;
}

}  // namespace radmot::train
