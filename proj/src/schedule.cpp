// Copyright (C) 2026 the diffstategrad authors
// SPDX-License-Identifier: Apache-2.0
#include "dsg/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace dsg {

namespace {
void check_t(int t, const NoiseSchedule& sched, int lowest) {
  if (t < lowest || t > sched.T)
    throw std::out_of_range("schedule: step index out of range");
}
}  // namespace

NoiseSchedule make_vp_schedule(int T, double beta_min, double beta_max) {
  if (T < 2) throw std::invalid_argument("make_vp_schedule: T must be >= 2");
  if (!(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0))
    throw std::invalid_argument("make_vp_schedule: need 0 < beta_min <= beta_max < 1");

  NoiseSchedule s;
  s.T = T;
  s.beta = Vec::Zero(T + 1);
  s.alpha_bar = Vec::Ones(T + 1);
  s.sigma_tilde = Vec::Zero(T + 1);
  for (int t = 1; t <= T; ++t) {
    s.beta[t] = beta_min + (beta_max - beta_min) * double(t - 1) / double(T - 1);
    s.alpha_bar[t] = s.alpha_bar[t - 1] * (1.0 - s.beta[t]);
    s.sigma_tilde[t] =
        std::sqrt(s.beta[t] * (1.0 - s.alpha_bar[t - 1]) / (1.0 - s.alpha_bar[t]));
  }
  return s;
}

Mat add_noise(const Eigen::Ref<const Mat>& x0, int t,
              const Eigen::Ref<const Mat>& eps, const NoiseSchedule& sched) {
  check_t(t, sched, 0);
  if (eps.rows() != x0.rows() || eps.cols() != x0.cols())
    throw std::invalid_argument("add_noise: eps shape mismatch");
  const double abar = sched.alpha_bar[t];
  return std::sqrt(abar) * x0 + std::sqrt(1.0 - abar) * eps;
}

Mat ddim_step(const Eigen::Ref<const Mat>& z_next,
              const Eigen::Ref<const Mat>& z0_hat,
              const Eigen::Ref<const Mat>& eps_hat, int t, double eta,
              double delta, const NoiseSchedule& sched, Rng& rng) {
  check_t(t, sched, 0);
  if (z0_hat.rows() != z_next.rows() || z0_hat.cols() != z_next.cols() ||
      eps_hat.rows() != z_next.rows() || eps_hat.cols() != z_next.cols())
    throw std::invalid_argument("ddim_step: shape mismatch");
  const double abar = sched.alpha_bar[t];
  const double under_root = 1.0 - abar - eta * delta * delta;
  if (under_root < 0.0)
    throw std::invalid_argument("ddim_step: negative value under square root");
  Mat out = std::sqrt(abar) * z0_hat + std::sqrt(under_root) * eps_hat;
  if (eta != 0.0)
    out += eta * delta * randn_mat(rng, z_next.rows(), z_next.cols());
  return out;
}

Mat ancestral_step(const Eigen::Ref<const Mat>& z_t,
                   const Eigen::Ref<const Mat>& z0_hat, int t,
                   const NoiseSchedule& sched, Rng& rng) {
  check_t(t, sched, 1);
  if (z0_hat.rows() != z_t.rows() || z0_hat.cols() != z_t.cols())
    throw std::invalid_argument("ancestral_step: shape mismatch");
  const double abar = sched.alpha_bar[t];
  const double abar_prev = sched.alpha_bar[t - 1];
  const double beta = sched.beta[t];
  const double alpha = 1.0 - beta;
  const double c_state = std::sqrt(alpha) * (1.0 - abar_prev) / (1.0 - abar);
  const double c_clean = std::sqrt(abar_prev) * beta / (1.0 - abar);
  Mat out = c_state * z_t + c_clean * z0_hat;
  if (sched.sigma_tilde[t] > 0.0)
    out += sched.sigma_tilde[t] * randn_mat(rng, z_t.rows(), z_t.cols());
  return out;
}

}  // namespace dsg
