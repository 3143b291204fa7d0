#pragma once

#include <cstddef>
#include <vector>

#include "otseg/matrix.hpp"

namespace otseg {

struct NormalizeResult {
  Matrix values;
  std::size_t zero_rows = 0;  // rows left untouched because their norm was 0
};

// Row-wise L2 normalization. Zero rows are passed through unchanged and
// counted instead of poisoning the output with NaNs.
NormalizeResult l2_normalize_rows(const Matrix& m);

// Row-wise softmax with max subtraction.
Matrix row_softmax(const Matrix& m);

// Row-wise log-softmax, safe for large magnitude logits.
Matrix stable_log_softmax_rows(const Matrix& m);

struct ScatterMeanResult {
  Matrix means;                   // group_count x d
  std::vector<bool> empty_group;  // true where no row mapped to the group
};

// Mean of rows sharing an index. Indices must lie in [0, group_count).
ScatterMeanResult scatter_mean(const Matrix& values,
                               const std::vector<int>& index,
                               std::size_t group_count);

}  // namespace otseg
