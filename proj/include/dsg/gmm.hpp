// Copyright (C) 2026 the diffstategrad authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "dsg/mat.hpp"
#include "dsg/rng.hpp"
#include "dsg/schedule.hpp"

namespace dsg {

/// Gaussian mixture over states in rows x cols matrix form. Covariances are
/// full d x d symmetric PSD matrices over the column-major flattening,
/// d = rows * cols.
struct GmmPrior {
  Vec weights;                   // simplex, sums to 1
  std::vector<Mat> means;        // each rows x cols
  std::vector<Mat> covariances;  // each d x d
  Index rows = 0;
  Index cols = 0;

  Index dim() const { return rows * cols; }
  Index components() const { return weights.size(); }

  static GmmPrior isotropic(Vec weights, std::vector<Mat> means, double eps);

  /// Toy prior with low-rank structure: K components whose means are sums
  /// of `rank` random outer products, scaled to Frobenius norm
  /// sqrt(rows * cols), with eps * I covariances.
  static GmmPrior random_low_rank(int K, Index rows, Index cols, int rank,
                                  double cov_eps, Rng& rng);
};

/// Exact posterior of a GmmPrior under y = A x + n, n ~ N(0, sigma^2 I);
/// same representation as the prior.
using PosteriorGmm = GmmPrior;

/// log of the marginal density sum_i w_i N(x; scale*mu_i,
/// scale^2 Sigma_i + noise_var I), with log-sum-exp stabilization.
/// VP marginals use (scale, noise_var) = (sqrt(abar_t), 1-abar_t);
/// VE marginals use (1, sigma^2).
double mixture_log_density(const GmmPrior& prior, const Eigen::Ref<const Mat>& x,
                           double scale, double noise_var);

Mat mixture_score(const GmmPrior& prior, const Eigen::Ref<const Mat>& x,
                  double scale, double noise_var);

/// Hessian of the marginal log density at x (d x d, symmetric).
Eigen::MatrixXd mixture_log_hessian(const GmmPrior& prior,
                                    const Eigen::Ref<const Mat>& x,
                                    double scale, double noise_var);

Mat score(const GmmPrior& prior, const Eigen::Ref<const Mat>& x, int t,
          const NoiseSchedule& sched);
Mat score_ve(const GmmPrior& prior, const Eigen::Ref<const Mat>& x, double sigma);

/// E[x0 | x_t] = (x_t + (1-abar_t) score(x_t, t)) / sqrt(abar_t)
Mat tweedie_denoise(const GmmPrior& prior, const Eigen::Ref<const Mat>& x_t,
                    int t, const NoiseSchedule& sched);

/// VE form: x_t + sigma^2 score_ve(x_t, sigma)
Mat tweedie_denoise_ve(const GmmPrior& prior, const Eigen::Ref<const Mat>& x_t,
                       double sigma);

/// Pullback of an upstream gradient through the Tweedie denoiser:
/// returns J^T grad with J = d tweedie(x_t) / d x_t
///   = (I + (1-abar_t) H(x_t)) / sqrt(abar_t).
Mat tweedie_pullback(const GmmPrior& prior, const Eigen::Ref<const Mat>& x_t,
                     int t, const NoiseSchedule& sched,
                     const Eigen::Ref<const Mat>& grad_at_x0);

/// Standard Gaussian conjugacy per component; weights reweighted by the
/// component evidences N(y; A mu_i, A Sigma_i A^T + sigma^2 I) and
/// renormalized. A acts on the column-major flattening.
PosteriorGmm exact_linear_posterior(const GmmPrior& prior,
                                    const Eigen::Ref<const Eigen::MatrixXd>& A,
                                    const Eigen::Ref<const Vec>& y,
                                    double noise_sigma);

Mat sample(const GmmPrior& prior, Rng& rng);

Mat mixture_mean(const GmmPrior& prior);
double mixture_cov_trace(const GmmPrior& prior);

// Prior file format: "gmm K rows cols", one line of K weights, then per
// component a "cov" line (either "cov scalar <v>" or "cov full" followed by
// a d x d matrix block) and the mean in the matrix text format.
void save_gmm(std::ostream& os, const GmmPrior& prior);
void save_gmm_file(const std::string& path, const GmmPrior& prior);
GmmPrior load_gmm(std::istream& is);
GmmPrior load_gmm_file(const std::string& path);

}  // namespace dsg
