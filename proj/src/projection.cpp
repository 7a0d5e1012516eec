// Copyright (C) 2026 the diffstategrad authors
// SPDX-License-Identifier: Apache-2.0
#include "dsg/projection.hpp"

#include <stdexcept>

namespace dsg {

SvdFactors svd(const Eigen::Ref<const Mat>& m) {
  if (m.rows() < 1 || m.cols() < 1)
    throw std::invalid_argument("svd: empty matrix");
  if (!all_finite(m))
    throw std::invalid_argument("svd: input has non-finite entries");
  Eigen::JacobiSVD<Mat> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {solver.matrixU(), solver.singularValues(), solver.matrixV()};
}

Index select_rank(const Eigen::Ref<const Vec>& singular_values, double tau) {
  const Index n = singular_values.size();
  if (n == 0) throw std::invalid_argument("select_rank: empty spectrum");
  if (!(tau > 0.0 && tau <= 1.0))
    throw std::invalid_argument("select_rank: tau must lie in (0, 1]");

  double total = 0.0;
  for (Index j = 0; j < n; ++j) total += singular_values[j] * singular_values[j];
  if (total == 0.0)
    throw std::invalid_argument("select_rank: all-zero spectrum, projection undefined");

  double partial = 0.0;
  for (Index k = 0; k < n; ++k) {
    partial += singular_values[k] * singular_values[k];
    if (partial / total >= tau) return k + 1;
  }
  // Reachable only through rounding; retain every nonzero value.
  Index r = n;
  while (r > 1 && singular_values[r - 1] == 0.0) --r;
  return r;
}

StateProjector build_projector(const Eigen::Ref<const Mat>& state, double tau,
                               int freq, ProjectionMode mode) {
  if (freq < 1) throw std::invalid_argument("build_projector: freq must be >= 1");
  const SvdFactors f = svd(state);
  const Index r = select_rank(f.S, tau);
  StateProjector p;
  p.U_r = f.U.leftCols(r);
  p.V_r = f.V.leftCols(r);
  p.rank = r;
  p.tau = tau;
  p.freq = freq;
  p.mode = mode;
  return p;
}

Mat project_gradient(const Eigen::Ref<const Mat>& g, const StateProjector& p) {
  if (g.rows() != p.U_r.rows() || g.cols() != p.V_r.rows())
    throw std::invalid_argument("project_gradient: gradient shape does not match projector");
  switch (p.mode) {
    case ProjectionMode::Left:
      return p.U_r * (p.U_r.transpose() * g);
    case ProjectionMode::Right:
      return (g * p.V_r) * p.V_r.transpose();
    case ProjectionMode::Full:
    default:
      // R = U_r^T g V_r, then U_r R V_r^T
      return p.U_r * (p.U_r.transpose() * g * p.V_r) * p.V_r.transpose();
  }
}

}  // namespace dsg
