// Copyright (C) 2026 the diffstategrad authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dsg/mat.hpp"

namespace dsg {

/// Thin SVD m = U * S.asDiagonal() * V^T with k = min(rows, cols),
/// singular values nonincreasing, U and V orthonormal-column matrices.
struct SvdFactors {
  Mat U;  // rows x k
  Vec S;  // k, nonincreasing, >= 0
  Mat V;  // cols x k
};

enum class ProjectionMode { Full, Left, Right };

/// Rank-r subspace of a diffusion state: the leading r left/right singular
/// vectors, the retention threshold tau that chose r, and the application
/// frequency F.
struct StateProjector {
  Mat U_r;  // rows x r
  Mat V_r;  // cols x r
  Index rank = 0;
  double tau = 1.0;
  int freq = 1;
  ProjectionMode mode = ProjectionMode::Full;
};

/// Jacobi SVD; deterministic up to the sign of singular-vector pairs.
/// Throws std::invalid_argument on empty or non-finite input.
SvdFactors svd(const Eigen::Ref<const Mat>& m);

/// Smallest k whose cumulative squared-singular-value fraction reaches tau:
/// r = argmin_k { sum_{j<=k} s_j^2 / sum_j s_j^2 >= tau }. Ties included
/// (>=). Throws on an all-zero spectrum.
Index select_rank(const Eigen::Ref<const Vec>& singular_values, double tau);

StateProjector build_projector(const Eigen::Ref<const Mat>& state, double tau,
                               int freq = 1,
                               ProjectionMode mode = ProjectionMode::Full);

/// Full mode: U_r U_r^T g V_r V_r^T, the orthogonal projection onto the
/// span of the leading singular directions on both sides. Left/Right apply
/// one-sided projection only.
Mat project_gradient(const Eigen::Ref<const Mat>& g, const StateProjector& p);

}  // namespace dsg
