// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "radmot/common/matrix.hpp"

namespace radmot::backbone {

/// For every point, the `k` nearest points within `radius` (itself included),
/// ties broken by lower index. Short neighbourhoods are padded by cycling over
/// the points found. Row-major N x k.
std::vector<std::int32_t> ball_query(const Matrix& positions, double radius, int k);

struct KnnResult {
  int k = 0;                           // effective k = min(requested, reference size)
  std::vector<std::int32_t> index;     // query x k
  std::vector<double> distance;        // query x k, Euclidean
};

/// k nearest reference points for every query point, ties broken by lower index.
KnnResult knn(const Matrix& query, const Matrix& reference, int k);

}  // namespace radmot::backbone
