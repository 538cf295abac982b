// SPDX-License-Identifier: Apache-2.0

#include "radmot/kernels/kernels.hpp"

namespace radmot::kernels::detail {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double squared_distance_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void max_update_scalar(const double* src, double* dst, std::int32_t* arg, std::int32_t index,
                       std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (src[i] > dst[i]) {
      dst[i] = src[i];
      arg[i] = index;
    }
  }
}

}  // namespace radmot::kernels::detail
