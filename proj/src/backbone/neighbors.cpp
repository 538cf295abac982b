// SPDX-License-Identifier: Apache-2.0

#include "radmot/backbone/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace radmot::backbone {

namespace {

double sq3(const double* a, const double* b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace

std::vector<std::int32_t> ball_query(const Matrix& positions, double radius, int k) {
  const std::size_t n = positions.rows();
  std::vector<std::int32_t> out(n * static_cast<std::size_t>(k));
  const double r2 = radius * radius;
  std::vector<std::pair<double, std::int32_t>> cand;
  for (std::size_t i = 0; i < n; ++i) {
    cand.clear();
    const double* pi = positions.row(i).data();
    for (std::size_t j = 0; j < n; ++j) {
      const double d2 = sq3(pi, positions.row(j).data());
      if (d2 <= r2) cand.emplace_back(d2, static_cast<std::int32_t>(j));
    }
    const std::size_t take = std::min<std::size_t>(cand.size(), static_cast<std::size_t>(k));
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end());
    for (int s = 0; s < k; ++s) out[i * k + s] = cand[static_cast<std::size_t>(s) % take].second;
  }
  return out;
}

KnnResult knn(const Matrix& query, const Matrix& reference, int k) {
  KnnResult res;
  res.k = static_cast<int>(std::min<std::size_t>(reference.rows(), static_cast<std::size_t>(k)));
  res.index.resize(query.rows() * res.k);
  res.distance.resize(query.rows() * res.k);
  if (res.k == 0) return res;
  std::vector<std::pair<double, std::int32_t>> cand(reference.rows());
  for (std::size_t i = 0; i < query.rows(); ++i) {
    const double* qi = query.row(i).data();
    for (std::size_t j = 0; j < reference.rows(); ++j) {
      cand[j] = {sq3(qi, reference.row(j).data()), static_cast<std::int32_t>(j)};
    }
    std::partial_sort(cand.begin(), cand.begin() + res.k, cand.end());
    for (int s = 0; s < res.k; ++s) {
      res.index[i * res.k + s] = cand[s].second;
      res.distance[i * res.k + s] = std::sqrt(cand[s].first);
    }
  }
  return res;
}

}  // namespace radmot::backbone
