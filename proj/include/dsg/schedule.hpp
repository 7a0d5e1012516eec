// Copyright (C) 2026 the diffstategrad authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dsg/mat.hpp"
#include "dsg/rng.hpp"

namespace dsg {

/// Discretized variance-preserving schedule. Arrays are indexed by step
/// t in [0, T]; index 0 is the data level (beta[0] = 0, alpha_bar[0] = 1,
/// sigma_tilde[0] = 0).
struct NoiseSchedule {
  int T = 0;
  Vec beta;         // size T+1, beta[t] in (0,1) for t >= 1, nondecreasing
  Vec alpha_bar;    // size T+1, strictly decreasing, alpha_bar[0] = 1
  Vec sigma_tilde;  // size T+1, sqrt(beta_t (1-abar_{t-1}) / (1-abar_t))
};

/// Linear beta schedule from beta_min to beta_max over T steps.
NoiseSchedule make_vp_schedule(int T, double beta_min, double beta_max);

/// sqrt(abar_t) x0 + sqrt(1-abar_t) eps
Mat add_noise(const Eigen::Ref<const Mat>& x0, int t,
              const Eigen::Ref<const Mat>& eps, const NoiseSchedule& sched);

/// sqrt(abar_t) z0_hat + sqrt(1 - abar_t - eta delta^2) eps_hat
///   + eta delta eps1,  eps1 ~ N(0, I) drawn from rng.
/// z_next is the state being stepped from; shapes must agree.
Mat ddim_step(const Eigen::Ref<const Mat>& z_next,
              const Eigen::Ref<const Mat>& z0_hat,
              const Eigen::Ref<const Mat>& eps_hat, int t, double eta,
              double delta, const NoiseSchedule& sched, Rng& rng);

/// DDPM posterior-mean step plus sigma_tilde_t-scaled Gaussian noise:
///   sqrt(alpha_t)(1-abar_{t-1})/(1-abar_t) z_t
///     + sqrt(abar_{t-1}) beta_t/(1-abar_t) z0_hat + sigma_tilde_t eps
Mat ancestral_step(const Eigen::Ref<const Mat>& z_t,
                   const Eigen::Ref<const Mat>& z0_hat, int t,
                   const NoiseSchedule& sched, Rng& rng);

}  // namespace dsg
