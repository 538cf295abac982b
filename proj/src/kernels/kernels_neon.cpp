// SPDX-License-Identifier: Apache-2.0

#include "radmot/kernels/kernels.hpp"

#if defined(RADMOT_HAVE_NEON)
#include <arm_neon.h>

namespace radmot::kernels::detail {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double squared_distance_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    acc = vfmaq_f64(acc, d, d);
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void max_update_neon(const double* src, double* dst, std::int32_t* arg, std::int32_t index,
                     std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t s = vld1q_f64(src + i);
    const float64x2_t d = vld1q_f64(dst + i);
    const uint64x2_t gt = vcgtq_f64(s, d);
    vst1q_f64(dst + i, vbslq_f64(gt, s, d));
    if (vgetq_lane_u64(gt, 0)) arg[i] = index;
    if (vgetq_lane_u64(gt, 1)) arg[i + 1] = index;
  }
  for (; i < n; ++i) {
    if (src[i] > dst[i]) {
      dst[i] = src[i];
      arg[i] = index;
    }
  }
}

}  // namespace radmot::kernels::detail
#endif
