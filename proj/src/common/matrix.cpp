// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "radmot/common/matrix.hpp"

namespace radmot {

Matrix hconcat(std::initializer_list<const Matrix*> blocks) {
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool first = true;
  for (const Matrix* b : blocks) {
    if (first) {
      rows = b->rows();
      first = false;
    }
    RADMOT_EXPECT(b->rows() == rows, "hconcat: row count mismatch");
    cols += b->cols();
  }
  Matrix out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    double* dst = out.row(i).data();
    for (const Matrix* b : blocks) {
      auto src = b->row(i);
      std::copy(src.begin(), src.end(), dst);
      dst += src.size();
    }
  }
  return out;
}

Matrix column_block(const Matrix& m, std::size_t begin, std::size_t width) {
  RADMOT_EXPECT(begin + width <= m.cols(), "column_block: range out of bounds");
  Matrix out(m.rows(), width);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto src = m.row(i);
    std::copy(src.begin() + begin, src.begin() + begin + width, out.row(i).begin());
  }
  return out;
}

bool all_finite(const Matrix& m) {
  return std::all_of(m.storage().begin(), m.storage().end(),
                     [](double v) { return std::isfinite(v); });
}

}  // namespace radmot
