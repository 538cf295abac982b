// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "radmot/common/matrix.hpp"

namespace radmot::train {

struct LossConfig {
  double alpha_flow = 0.5;
  double alpha_seg = 0.5;
  double alpha_aff = 1.0;
  double beta = 0.4;            // weight of the static-class term
  double log_epsilon = 1e-7;    // probabilities are clamped to [eps, 1 - eps]
  double motion_label_threshold = 0.05;  // meters per frame

  void validate() const;
};

struct LossParts {
  double flow = 0.0;
  double seg = 0.0;
  double aff = 0.0;
};

/// Number of loss evaluations that received an empty input and returned 0.
std::uint64_t empty_loss_warnings();

/// (1/N) sum_i ||s_i - gt_i||^2. `grad` receives dL/dpred.
double loss_flow(const Matrix& pred, const Matrix& gt, Matrix* grad = nullptr);

/// Class-balanced negative log-likelihood:
///   beta * mean_static(-log(1 - c)) + (1 - beta) * mean_moving(-log c).
/// A class absent from the mask contributes 0. `grad` receives dL/dc.
double loss_seg(const std::vector<double>& scores, const std::vector<std::uint8_t>& mask,
                double beta, double eps = 1e-7, std::vector<double>* grad = nullptr);

/// Mean binary cross-entropy over all K x M entries. `grad` receives dL/dpred.
double loss_aff(const Matrix& pred, const Matrix& gt, double eps = 1e-7, Matrix* grad = nullptr);

double loss_total(const LossParts& parts, const LossConfig& cfg);

}  // namespace radmot::train
