#pragma once

#include <array>
#include <cstdint>

#include "otseg/matrix.hpp"

namespace otseg {

struct Projection2d {
  Matrix coords;                     // N x 2
  std::array<double, 2> eigenvalues; // covariance spectrum, descending
};

// Top-2 principal components by power iteration with deflation. Needs at
// least 2 rows. Deterministic: the start vectors come from the seed and each
// component's sign is fixed by its largest-magnitude entry.
Projection2d project_2d(const Matrix& embeddings, std::uint64_t seed);

}  // namespace otseg
