// Copyright (C) 2026 the diffstategrad authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <utility>

namespace dsg {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Index = Eigen::Index;

inline bool all_finite(const Eigen::Ref<const Mat>& m) {
  return m.allFinite();
}

/// Factor n = rows * cols with rows <= cols and rows the largest divisor
/// of n not exceeding sqrt(n). Used to reshape vector states for SVD.
std::pair<Index, Index> most_square_shape(Index n);

inline Vec flatten(const Eigen::Ref<const Mat>& m) {
  return Eigen::Map<const Vec>(m.data(), m.size());
}

inline Mat unflatten(const Eigen::Ref<const Vec>& v, Index rows, Index cols) {
  return Eigen::Map<const Mat>(v.data(), rows, cols);
}

}  // namespace dsg
