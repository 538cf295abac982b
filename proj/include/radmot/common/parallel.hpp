// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace radmot {

/// Runs fn(0) .. fn(n - 1) on up to `jobs` threads. Each index runs exactly
/// once; if any calls throw, the exception of the lowest index is rethrown
/// after all workers finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace radmot
