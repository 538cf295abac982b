// SPDX-License-Identifier: Apache-2.0

#include "radmot/train/losses.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "radmot/common/errors.hpp"

namespace radmot::train {

namespace {
std::atomic<std::uint64_t> g_empty_warnings{0};

// -log(clamp(p)) and its derivative with respect to p (0 where clamped).
double nll(double p, double eps, double* d) {
  const double c = std::clamp(p, eps, 1.0 - eps);
  if (d) *d = (p < eps || p > 1.0 - eps) ? 0.0 : -1.0 / c;
  return -std::log(c);
}
}  // namespace

void LossConfig::validate() const {
  if (alpha_flow < 0.0 || alpha_seg < 0.0 || alpha_aff < 0.0) {
    throw ValidationError("loss: alphas must be >= 0");
  }
  if (!(beta > 0.0 && beta < 1.0)) throw ValidationError("loss: beta must be in (0,1)");
  if (!(log_epsilon > 0.0 && log_epsilon < 0.5)) throw ValidationError("loss: log_epsilon must be in (0,0.5)");
  if (!(motion_label_threshold >= 0.0)) throw ValidationError("loss: motion_label_threshold must be >= 0");
}

std::uint64_t empty_loss_warnings() { return g_empty_warnings.load(); }

double loss_flow(const Matrix& pred, const Matrix& gt, Matrix* grad) {
  RADMOT_EXPECT(pred.rows() == gt.rows() && pred.cols() == gt.cols(), "loss_flow: shape mismatch");
  if (grad) *grad = Matrix(pred.rows(), pred.cols());
  if (pred.rows() == 0) {
    ++g_empty_warnings;
    return 0.0;
  }
  const double inv_n = 1.0 / static_cast<double>(pred.rows());
  double total = 0.0;
  for (std::size_t i = 0; i < pred.storage().size(); ++i) {
    const double r = pred.storage()[i] - gt.storage()[i];
    total += r * r;
    if (grad) grad->storage()[i] = 2.0 * r * inv_n;
  }
  return total * inv_n;
}

double loss_seg(const std::vector<double>& scores, const std::vector<std::uint8_t>& mask,
                double beta, double eps, std::vector<double>* grad) {
  RADMOT_EXPECT(scores.size() == mask.size(), "loss_seg: length mismatch");
  if (grad) grad->assign(scores.size(), 0.0);
  std::size_t n_moving = 0;
  for (auto m : mask) n_moving += m ? 1 : 0;
  const std::size_t n_static = mask.size() - n_moving;
  if (mask.empty()) {
    ++g_empty_warnings;
    return 0.0;
  }
  double static_sum = 0.0, moving_sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    double d = 0.0;
    if (mask[i]) {
      moving_sum += nll(scores[i], eps, &d);
      if (grad) (*grad)[i] = (1.0 - beta) * d / static_cast<double>(n_moving);
    } else {
      static_sum += nll(1.0 - scores[i], eps, &d);
      if (grad) (*grad)[i] = -beta * d / static_cast<double>(n_static);
    }
  }
  double loss = 0.0;
  if (n_static > 0) loss += beta * static_sum / static_cast<double>(n_static);
  if (n_moving > 0) loss += (1.0 - beta) * moving_sum / static_cast<double>(n_moving);
  return loss;
}

double loss_aff(const Matrix& pred, const Matrix& gt, double eps, Matrix* grad) {
  RADMOT_EXPECT(pred.rows() == gt.rows() && pred.cols() == gt.cols(), "loss_aff: shape mismatch");
  if (grad) *grad = Matrix(pred.rows(), pred.cols());
  const std::size_t n = pred.storage().size();
  if (n == 0) {
    ++g_empty_warnings;
    return 0.0;
  }
  const double inv = 1.0 / static_cast<double>(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = pred.storage()[i];
    const double y = gt.storage()[i];
    double d1 = 0.0, d0 = 0.0;
    total += y * nll(a, eps, &d1) + (1.0 - y) * nll(1.0 - a, eps, &d0);
    if (grad) grad->storage()[i] = (y * d1 - (1.0 - y) * d0) * inv;
  }
  return total * inv;
}

double loss_total(const LossParts& p, const LossConfig& cfg) {
  return cfg.alpha_flow * p.flow + cfg.alpha_seg * p.seg + cfg.alpha_aff * p.aff;
}

}  // namespace radmot::train
