// Copyright (C) 2026 the diffstategrad authors
// SPDX-License-Identifier: Apache-2.0
#include "dsg/operators.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace dsg {

namespace {

Index reflect_index(Index i, Index n) {
  // OpenCV-style reflect without edge repetition avoidance: -1 -> 0, n -> n-1.
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

// 1-D convolution with reflective padding as an n x n matrix.
Mat conv_matrix(Index n, const Vec& kernel) {
  const Index half = (kernel.size() - 1) / 2;
  Mat B = Mat::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index a = -half; a <= half; ++a)
      B(i, reflect_index(i + a, n)) += kernel[a + half];
  return B;
}

double catmull_rom(double t) {
  t = std::abs(t);
  if (t < 1.0) return 1.5 * t * t * t - 2.5 * t * t + 1.0;
  if (t < 2.0) return -0.5 * t * t * t + 2.5 * t * t - 4.0 * t + 2.0;
  return 0.0;
}

// 1-D bicubic downsample by an integer factor as an (n/f) x n matrix.
// Kernel support is stretched by the factor; weights renormalized per row.
Mat downsample_matrix(Index n, int f) {
  const Index m = n / f;
  Mat D = Mat::Zero(m, n);
  const double support = 2.0 * f;
  for (Index o = 0; o < m; ++o) {
    const double center = (o + 0.5) * f - 0.5;
    const Index j0 = static_cast<Index>(std::ceil(center - support));
    const Index j1 = static_cast<Index>(std::floor(center + support));
    double sum = 0.0;
    for (Index j = j0; j <= j1; ++j) {
      const double w = catmull_rom((j - center) / f);
      if (w == 0.0) continue;
      D(o, reflect_index(j, n)) += w;
      sum += w;
    }
    D.row(o) /= sum;
  }
  return D;
}

using CMat = Eigen::MatrixXcd;

// Symmetric unnormalized DFT matrix F_{jk} = exp(-2 pi i j k / n).
CMat dft_matrix(Index n) {
  CMat F(n, n);
  const double w = -2.0 * std::numbers::pi / double(n);
  for (Index j = 0; j < n; ++j)
    for (Index k = 0; k < n; ++k)
      F(j, k) = std::polar(1.0, w * double((j * k) % n));
  return F;
}

Index padded_side(Index n, double oversample) {
  return static_cast<Index>(std::llround(double(n) * oversample));
}

// Complex spectrum of the normalized, zero-padded input.
CMat pr_spectrum(const ForwardOperator& op, const Eigen::Ref<const Mat>& x) {
  const Index pr = padded_side(op.in_rows, op.oversample);
  const Index pc = padded_side(op.in_cols, op.oversample);
  Mat padded = Mat::Zero(pr, pc);
  padded.topLeftCorner(op.in_rows, op.in_cols) =
      (x.array() - op.norm_lo) / (op.norm_hi - op.norm_lo);
  const CMat Fr = dft_matrix(pr);
  const CMat Fc = dft_matrix(pc);
  return Fr * padded * Fc;
}

void check_in_shape(const ForwardOperator& op, const Eigen::Ref<const Mat>& x) {
  if (x.rows() != op.in_rows || x.cols() != op.in_cols)
    throw std::invalid_argument("operator: input shape mismatch");
}

void check_out_shape(const ForwardOperator& op, const Eigen::Ref<const Mat>& y) {
  if (y.rows() != op.out_rows || y.cols() != op.out_cols)
    throw std::invalid_argument("operator: measurement shape mismatch");
}

}  // namespace

std::string op_kind_name(OpKind k) {
  switch (k) {
    case OpKind::BoxMask: return "box_mask";
    case OpKind::RandomMask: return "random_mask";
    case OpKind::GaussianBlur: return "gaussian_blur";
    case OpKind::Downsample: return "downsample";
    case OpKind::PhaseRetrieval: return "phase_retrieval";
    case OpKind::HdrClip: return "hdr_clip";
  }
  throw std::logic_error("op_kind_name: unknown kind");
}

OpKind op_kind_from_name(const std::string& name) {
  if (name == "box_mask") return OpKind::BoxMask;
  if (name == "random_mask") return OpKind::RandomMask;
  if (name == "gaussian_blur") return OpKind::GaussianBlur;
  if (name == "downsample") return OpKind::Downsample;
  if (name == "phase_retrieval") return OpKind::PhaseRetrieval;
  if (name == "hdr_clip") return OpKind::HdrClip;
  throw std::invalid_argument("unknown operator kind: " + name);
}

ForwardOperator make_box_mask(Index rows, Index cols, Index top, Index left,
                              Index box_h, Index box_w) {
  if (top < 0 || left < 0 || top + box_h > rows || left + box_w > cols)
    throw std::invalid_argument("make_box_mask: box out of bounds");
  ForwardOperator op;
  op.kind = OpKind::BoxMask;
  op.in_rows = op.out_rows = rows;
  op.in_cols = op.out_cols = cols;
  op.mask = Mat::Ones(rows, cols);
  op.mask.block(top, left, box_h, box_w).setZero();
  return op;
}

ForwardOperator make_center_box_mask(Index rows, Index cols) {
  const Index h = rows / 2, w = cols / 2;
  return make_box_mask(rows, cols, (rows - h) / 2, (cols - w) / 2, h, w);
}

ForwardOperator make_random_mask(Index rows, Index cols, double keep_ratio,
                                 Rng& rng) {
  if (!(keep_ratio >= 0.0 && keep_ratio <= 1.0))
    throw std::invalid_argument("make_random_mask: keep_ratio in [0,1]");
  ForwardOperator op;
  op.kind = OpKind::RandomMask;
  op.in_rows = op.out_rows = rows;
  op.in_cols = op.out_cols = cols;
  op.mask = Mat::Ones(rows, cols);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i)
      if (unif(rng) >= keep_ratio) op.mask(i, j) = 0.0;
  return op;
}

ForwardOperator make_mask_from(const Mat& mask01, OpKind kind) {
  if (kind != OpKind::BoxMask && kind != OpKind::RandomMask)
    throw std::invalid_argument("make_mask_from: not a mask kind");
  for (Index j = 0; j < mask01.cols(); ++j)
    for (Index i = 0; i < mask01.rows(); ++i)
      if (mask01(i, j) != 0.0 && mask01(i, j) != 1.0)
        throw std::invalid_argument("make_mask_from: mask entries must be 0 or 1");
  ForwardOperator op;
  op.kind = kind;
  op.in_rows = op.out_rows = mask01.rows();
  op.in_cols = op.out_cols = mask01.cols();
  op.mask = mask01;
  return op;
}

ForwardOperator make_gaussian_blur(Index rows, Index cols, int width, double sigma) {
  if (width < 1 || width % 2 == 0)
    throw std::invalid_argument("make_gaussian_blur: width must be odd and >= 1");
  if (sigma <= 0.0) throw std::invalid_argument("make_gaussian_blur: sigma > 0");
  ForwardOperator op;
  op.kind = OpKind::GaussianBlur;
  op.in_rows = op.out_rows = rows;
  op.in_cols = op.out_cols = cols;
  const int half = (width - 1) / 2;
  op.kernel.resize(width);
  for (int a = -half; a <= half; ++a)
    op.kernel[a + half] = std::exp(-0.5 * double(a) * double(a) / (sigma * sigma));
  op.kernel /= op.kernel.sum();
  op.row_action = conv_matrix(rows, op.kernel);
  op.col_action = conv_matrix(cols, op.kernel);
  return op;
}

ForwardOperator make_downsample(Index rows, Index cols, int factor) {
  if (factor < 1 || rows % factor != 0 || cols % factor != 0)
    throw std::invalid_argument("make_downsample: factor must divide both sides");
  ForwardOperator op;
  op.kind = OpKind::Downsample;
  op.in_rows = rows;
  op.in_cols = cols;
  op.out_rows = rows / factor;
  op.out_cols = cols / factor;
  op.factor = factor;
  op.row_action = downsample_matrix(rows, factor);
  op.col_action = downsample_matrix(cols, factor);
  return op;
}

ForwardOperator make_phase_retrieval(Index rows, Index cols, double oversample,
                                     double norm_lo, double norm_hi) {
  if (oversample < 1.0)
    throw std::invalid_argument("make_phase_retrieval: oversample >= 1");
  if (!(norm_hi > norm_lo))
    throw std::invalid_argument("make_phase_retrieval: bad normalization range");
  ForwardOperator op;
  op.kind = OpKind::PhaseRetrieval;
  op.in_rows = rows;
  op.in_cols = cols;
  op.out_rows = padded_side(rows, oversample);
  op.out_cols = padded_side(cols, oversample);
  op.oversample = oversample;
  op.norm_lo = norm_lo;
  op.norm_hi = norm_hi;
  return op;
}

ForwardOperator make_hdr_clip(Index rows, Index cols, double scale) {
  if (scale <= 0.0) throw std::invalid_argument("make_hdr_clip: scale > 0");
  ForwardOperator op;
  op.kind = OpKind::HdrClip;
  op.in_rows = op.out_rows = rows;
  op.in_cols = op.out_cols = cols;
  op.scale = scale;
  return op;
}

Mat apply(const ForwardOperator& op, const Eigen::Ref<const Mat>& x) {
  check_in_shape(op, x);
  switch (op.kind) {
    case OpKind::BoxMask:
    case OpKind::RandomMask:
      return op.mask.cwiseProduct(x);
    case OpKind::GaussianBlur:
    case OpKind::Downsample:
      return op.row_action * x * op.col_action.transpose();
    case OpKind::PhaseRetrieval:
      return pr_spectrum(op, x).cwiseAbs();
    case OpKind::HdrClip:
      return (op.scale * x).cwiseMax(0.0).cwiseMin(1.0);
  }
  throw std::logic_error("apply: unknown kind");
}

Mat apply_adjoint(const ForwardOperator& op, const Eigen::Ref<const Mat>& r) {
  check_out_shape(op, r);
  switch (op.kind) {
    case OpKind::BoxMask:
    case OpKind::RandomMask:
      return op.mask.cwiseProduct(r);
    case OpKind::GaussianBlur:
    case OpKind::Downsample:
      return op.row_action.transpose() * r * op.col_action;
    default:
      throw std::invalid_argument("apply_adjoint: nonlinear operator");
  }
}

Mat data_fit_grad(const ForwardOperator& op, const Eigen::Ref<const Mat>& x,
                  const Eigen::Ref<const Mat>& y) {
  check_in_shape(op, x);
  check_out_shape(op, y);
  switch (op.kind) {
    case OpKind::BoxMask:
    case OpKind::RandomMask:
    case OpKind::GaussianBlur:
    case OpKind::Downsample:
      return apply_adjoint(op, apply(op, x) - y);
    case OpKind::PhaseRetrieval: {
      const CMat c = pr_spectrum(op, x);
      const Mat mag = c.cwiseAbs();
      // d|c| is undefined at zero bins; use the zero subgradient there.
      CMat g = CMat::Zero(c.rows(), c.cols());
      for (Index j = 0; j < c.cols(); ++j)
        for (Index i = 0; i < c.rows(); ++i)
          if (mag(i, j) > 0.0)
            g(i, j) = (mag(i, j) - y(i, j)) * c(i, j) / mag(i, j);
      const CMat Fr = dft_matrix(c.rows());
      const CMat Fc = dft_matrix(c.cols());
      const Mat grad_padded = (Fr * g.conjugate() * Fc).real();
      return grad_padded.topLeftCorner(op.in_rows, op.in_cols) /
             (op.norm_hi - op.norm_lo);
    }
    case OpKind::HdrClip: {
      const Mat scaled = op.scale * x;
      const Mat clipped = scaled.cwiseMax(0.0).cwiseMin(1.0);
      Mat grad = op.scale * (clipped - y);
      for (Index j = 0; j < x.cols(); ++j)
        for (Index i = 0; i < x.rows(); ++i)
          if (scaled(i, j) <= 0.0 || scaled(i, j) >= 1.0) grad(i, j) = 0.0;
      return grad;
    }
  }
  throw std::logic_error("data_fit_grad: unknown kind");
}

Measurement make_measurement(const ForwardOperator& op,
                             const Eigen::Ref<const Mat>& x_true,
                             double noise_sigma, Rng& rng) {
  if (noise_sigma < 0.0)
    throw std::invalid_argument("make_measurement: noise_sigma >= 0");
  Measurement m;
  m.y = apply(op, x_true);
  m.noise_sigma = noise_sigma;
  if (noise_sigma > 0.0)
    m.y += noise_sigma * randn_mat(rng, op.out_rows, op.out_cols);
  return m;
}

Eigen::MatrixXd materialize(const ForwardOperator& op) {
  if (!op.linear()) throw std::invalid_argument("materialize: nonlinear operator");
  const Index n = op.in_rows * op.in_cols;
  const Index m = op.out_rows * op.out_cols;
  Eigen::MatrixXd A(m, n);
  Mat basis = Mat::Zero(op.in_rows, op.in_cols);
  for (Index k = 0; k < n; ++k) {
    basis(k % op.in_rows, k / op.in_rows) = 1.0;
    A.col(k) = flatten(apply(op, basis));
    basis(k % op.in_rows, k / op.in_rows) = 0.0;
  }
  return A;
}

}  // namespace dsg
