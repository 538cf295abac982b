// SPDX-License-Identifier: Apache-2.0

#pragma once

// Inner-loop arithmetic used by every dense layer, the cost volume, and the
// neighbour searches. Each kernel has a scalar reference implementation and
// vector variants; one table is selected at startup from the CPU features and
// the RADMOT_SIMD environment variable ("scalar", "avx2", "neon", "auto").

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace radmot::kernels {

enum class Isa { kScalar, kAvx2, kNeon };

struct KernelTable {
  Isa isa;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // sum_i (a[i] - b[i])^2
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  // where src[i] > dst[i]: dst[i] = src[i], arg[i] = index. Strict comparison
  // keeps the earliest index on ties.
  void (*max_update)(const double* src, double* dst, std::int32_t* arg, std::int32_t index,
                     std::size_t n);
};

bool supported(Isa isa) noexcept;

/// Table for a specific ISA. Throws std::invalid_argument when unsupported on this CPU/build.
const KernelTable& table_for(Isa isa);

/// Currently selected table.
const KernelTable& active() noexcept;

/// Switches the process-wide table. Intended for tests and benchmarks; not
/// safe while another thread runs kernels.
void select(Isa isa);

std::string_view name(Isa isa) noexcept;

inline double dot(const double* a, const double* b, std::size_t n) {
  return active().dot(a, b, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active().axpy(alpha, x, y, n);
}
inline double squared_distance(const double* a, const double* b, std::size_t n) {
  return active().squared_distance(a, b, n);
}
inline void max_update(const double* src, double* dst, std::int32_t* arg, std::int32_t index,
                       std::size_t n) {
  active().max_update(src, dst, arg, index, n);
}

namespace detail {
double dot_scalar(const double* a, const double* b, std::size_t n);
void axpy_scalar(double alpha, const double* x, double* y, std::size_t n);
double squared_distance_scalar(const double* a, const double* b, std::size_t n);
void max_update_scalar(const double* src, double* dst, std::int32_t* arg, std::int32_t index,
                       std::size_t n);

#if defined(RADMOT_HAVE_AVX2)
double dot_avx2(const double* a, const double* b, std::size_t n);
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n);
double squared_distance_avx2(const double* a, const double* b, std::size_t n);
void max_update_avx2(const double* src, double* dst, std::int32_t* arg, std::int32_t index,
                     std::size_t n);
#endif

#if defined(RADMOT_HAVE_NEON)
double dot_neon(const double* a, const double* b, std::size_t n);
void axpy_neon(double alpha, const double* x, double* y, std::size_t n);
double squared_distance_neon(const double* a, const double* b, std::size_t n);
void max_update_neon(const double* src, double* dst, std::int32_t* arg, std::int32_t index,
                     std::size_t n);
#endif
}  // namespace detail

}  // namespace radmot::kernels
