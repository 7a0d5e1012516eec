// Copyright (C) 2026 the diffstategrad authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "dsg/mat.hpp"
#include "dsg/rng.hpp"

namespace dsg {

enum class OpKind {
  BoxMask,
  RandomMask,
  GaussianBlur,
  Downsample,
  PhaseRetrieval,
  HdrClip,
};

std::string op_kind_name(OpKind k);
OpKind op_kind_from_name(const std::string& name);

/// Measurement map A(.). Linear kinds carry their separable 1-D actions so
/// apply/adjoint/materialize agree to machine precision.
struct ForwardOperator {
  OpKind kind = OpKind::BoxMask;
  Index in_rows = 0, in_cols = 0;
  Index out_rows = 0, out_cols = 0;

  Mat mask;           // masks: 1 = kept, 0 = dropped (in_rows x in_cols)
  Mat row_action;     // blur/downsample: out_rows x in_rows
  Mat col_action;     // blur/downsample: out_cols x in_cols
  Vec kernel;         // blur taps (odd length, sums to 1)
  int factor = 1;     // downsample
  double oversample = 2.0;          // phase retrieval padding rate
  double norm_lo = -1.0, norm_hi = 1.0;  // phase retrieval input range map
  double scale = 2.0;               // hdr

  bool linear() const {
    return kind != OpKind::PhaseRetrieval && kind != OpKind::HdrClip;
  }
};

struct Measurement {
  Mat y;
  double noise_sigma = 0.0;
};

ForwardOperator make_box_mask(Index rows, Index cols, Index top, Index left,
                              Index box_h, Index box_w);
/// Central box covering a quarter of the area (half the side each way).
ForwardOperator make_center_box_mask(Index rows, Index cols);
ForwardOperator make_random_mask(Index rows, Index cols, double keep_ratio,
                                 Rng& rng);
ForwardOperator make_mask_from(const Mat& mask01, OpKind kind = OpKind::RandomMask);
/// Normalized Gaussian taps on an odd width x width support, reflective
/// padding at the borders.
ForwardOperator make_gaussian_blur(Index rows, Index cols, int width, double sigma);
/// Catmull-Rom weighted average by an integer factor (kernel stretched by
/// the factor for antialiasing), reflective padding.
ForwardOperator make_downsample(Index rows, Index cols, int factor);
/// Magnitude of the 2-D DFT of the zero-padded state; the input is first
/// mapped affinely from [norm_lo, norm_hi] to [0, 1].
ForwardOperator make_phase_retrieval(Index rows, Index cols, double oversample,
                                     double norm_lo = -1.0, double norm_hi = 1.0);
ForwardOperator make_hdr_clip(Index rows, Index cols, double scale);

Mat apply(const ForwardOperator& op, const Eigen::Ref<const Mat>& x);

/// Exact gradient of 0.5 || y - A(x) ||_F^2 with respect to x. Linear kinds
/// evaluate A^T (A x - y); phase retrieval and HDR use the analytic chain
/// rule, with zero subgradients at zero-magnitude bins and on clipped
/// coordinates respectively.
Mat data_fit_grad(const ForwardOperator& op, const Eigen::Ref<const Mat>& x,
                  const Eigen::Ref<const Mat>& y);

/// A^T r for linear kinds (r shaped like the output).
Mat apply_adjoint(const ForwardOperator& op, const Eigen::Ref<const Mat>& r);

Measurement make_measurement(const ForwardOperator& op,
                             const Eigen::Ref<const Mat>& x_true,
                             double noise_sigma, Rng& rng);

/// Dense matrix of a linear kind over column-major flattenings
/// (out_rows*out_cols) x (in_rows*in_cols). Throws for nonlinear kinds.
Eigen::MatrixXd materialize(const ForwardOperator& op);

}  // namespace dsg
