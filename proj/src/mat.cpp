// Copyright (C) 2026 the diffstategrad authors
// SPDX-License-Identifier: Apache-2.0
#include "dsg/mat.hpp"

#include <cmath>
#include <stdexcept>

namespace dsg {

std::pair<Index, Index> most_square_shape(Index n) {
  if (n < 1) throw std::invalid_argument("most_square_shape: n must be >= 1");
  const auto root = static_cast<Index>(std::sqrt(static_cast<double>(n)));
  for (Index r = root; r >= 1; --r) {
    if (n % r == 0) return {r, n / r};
  }
  return {1, n};
}

}  // namespace dsg
