// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "radmot/kernels/kernels.hpp"

namespace radmot::kernels {

namespace {

constexpr KernelTable kScalarTable{Isa::kScalar, detail::dot_scalar, detail::axpy_scalar,
                                   detail::squared_distance_scalar, detail::max_update_scalar};
#if defined(RADMOT_HAVE_AVX2)
constexpr KernelTable kAvx2Table{Isa::kAvx2, detail::dot_avx2, detail::axpy_avx2,
                                 detail::squared_distance_avx2, detail::max_update_avx2};
#endif
#if defined(RADMOT_HAVE_NEON)
constexpr KernelTable kNeonTable{Isa::kNeon, detail::dot_neon, detail::axpy_neon,
                                 detail::squared_distance_neon, detail::max_update_neon};
#endif

const KernelTable* best_available() {
  const char* env = std::getenv("RADMOT_SIMD");
  const std::string want = env ? env : "auto";
  if (want == "scalar") return &kScalarTable;
  if (want == "avx2") return &table_for(Isa::kAvx2);
  if (want == "neon") return &table_for(Isa::kNeon);
  if (supported(Isa::kAvx2)) return &table_for(Isa::kAvx2);
  if (supported(Isa::kNeon)) return &table_for(Isa::kNeon);
  return &kScalarTable;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{best_available()};
  return table;
}

}  // namespace

bool supported(Isa isa) noexcept {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(RADMOT_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::kNeon:
#if defined(RADMOT_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table_for(Isa isa) {
  if (!supported(isa)) {
    throw std::invalid_argument("kernel ISA not supported: " + std::string(name(isa)));
  }
  switch (isa) {
#if defined(RADMOT_HAVE_AVX2)
    case Isa::kAvx2:
      return kAvx2Table;
#endif
#if defined(RADMOT_HAVE_NEON)
    case Isa::kNeon:
      return kNeonTable;
#endif
    default:
      return kScalarTable;
  }
}

const KernelTable& active() noexcept { return *current().load(std::memory_order_relaxed); }

void select(Isa isa) { current().store(&table_for(isa), std::memory_order_relaxed); }

std::string_view name(Isa isa) noexcept {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
    case Isa::kNeon:
      return "neon";
  }
  return "unknown";
}

}  // namespace radmot::kernels
