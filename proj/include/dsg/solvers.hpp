// Copyright (C) 2026 the diffstategrad authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dsg/autoencoder.hpp"
#include "dsg/gmm.hpp"
#include "dsg/mat.hpp"
#include "dsg/operators.hpp"
#include "dsg/projection.hpp"
#include "dsg/rng.hpp"
#include "dsg/schedule.hpp"

namespace dsg {

/// Which matrix defines the projection subspace at a guidance event.
enum class SubspaceChoice { State, Random, Gradient, None };

std::string subspace_name(SubspaceChoice s);
SubspaceChoice subspace_from_name(const std::string& name);

struct GuidanceConfig {
  double step_size = 0.5;      // eta_t, constant unless eta_schedule is set
  Vec eta_schedule;            // optional, indexed by guidance-event counter
  double tau = 0.99;
  int freq = 1;                // apply projection every freq-th event
  bool projection_enabled = true;
  ProjectionMode mode = ProjectionMode::Full;
  SubspaceChoice subspace = SubspaceChoice::State;
  bool record_states = true;   // keep per-event state snapshots
  bool record_matrices = false;  // keep applied gradients and projectors

  double eta_at(int event) const {
    if (eta_schedule.size() > 0 && event < eta_schedule.size())
      return eta_schedule[event];
    return step_size;
  }
};

struct TrajectoryStep {
  int step = 0;   // guidance-event counter
  int t = 0;      // schedule step / annealing level of the event
  double grad_norm = 0.0;
  double proj_grad_norm = 0.0;  // norm of the gradient actually applied
  Index rank = 0;               // 0 when no projection was applied
  Mat state;                    // post-update state (if record_states)
  std::optional<Mat> applied_grad;
  std::optional<StateProjector> projector;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  bool diverged = false;
  int diverged_step = -1;
};

struct SolveResult {
  Mat x0_hat;  // data-space reconstruction
  Trajectory trajectory;
};

/// Trajectory dump: step,t,grad_norm,proj_grad_norm,rank,state_rmse_to_truth.
/// truth_state must match the recorded state shape when given.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const Mat* truth_state = nullptr);

/// Ancestral-loop posterior sampler with the projected measurement-guidance
/// update z <- z - eta_t P(g_t); g_t differentiates the data-fit loss at the
/// pre-step state through the Tweedie denoiser and the decoder.
SolveResult run_dps(const GmmPrior& prior, const ForwardOperator& op,
                    const Measurement& meas, const NoiseSchedule& sched,
                    const GuidanceConfig& cfg, const Autoencoder& ae, Rng& rng);

/// Ancestral step followed by the combined measurement + gluing gradient,
/// projected and subtracted. The gluing target substitutes A^T y for the
/// unknown A^T A x*; it is active only for mask operators and when
/// gluing_weight > 0.
SolveResult run_psld_style(const GmmPrior& prior, const ForwardOperator& op,
                           const Measurement& meas, const NoiseSchedule& sched,
                           const GuidanceConfig& cfg, double gluing_weight,
                           const Autoencoder& ae, Rng& rng);

struct ResampleParams {
  std::vector<int> resample_steps;  // subset of {0..T-1}; empty = plain DDIM
  int gd_iters = 30;
  double gd_lr = 0.2;
  double gamma = 40.0;   // stochastic-resample mixing weight
  double ddim_eta = 1.0;
  double ddim_delta = 0.005;
};

/// DDIM loop with hard data consistency at the selected steps: gradient
/// descent on 0.5||y - A(D(z0))||^2 from the Tweedie initializer, projected
/// every freq-th descent step with the projector built once per resample
/// step, then stochastic resampling back to the current noise level.
SolveResult run_resample_style(const GmmPrior& prior, const ForwardOperator& op,
                               const Measurement& meas,
                               const NoiseSchedule& sched,
                               const GuidanceConfig& cfg,
                               const ResampleParams& rp, const Autoencoder& ae,
                               Rng& rng);

/// Draw from N((gamma sqrt(abar_t) z0_y + (1-abar_t) z'_t)/(gamma+1-abar_t),
///             gamma (1-abar_t)/(gamma+1-abar_t) I).
Mat stochastic_resample(const Eigen::Ref<const Mat>& z0_y,
                        const Eigen::Ref<const Mat>& z_prime_t, int t,
                        double gamma, const NoiseSchedule& sched, Rng& rng);

struct DapsParams {
  Vec sigmas;              // decreasing annealing levels; last entry may be 0
  int langevin_iters = 25;
  double langevin_step = 2e-3;
  double likelihood_sigma = 0.05;  // sigma_y in the likelihood term
  int ode_steps = 20;              // Euler steps for the probability-flow ODE
  /// Approximation radius r_t = sigma / sqrt(1 + sigma^2).
  static double radius(double sigma) {
    return sigma / std::sqrt(1.0 + sigma * sigma);
  }
  static Vec geometric_sigmas(double sigma_max, double sigma_min, int levels);
};

/// Annealed decoupled sampler: per level, denoise by integrating the
/// probability-flow ODE with the exact score, then Langevin iterations on
/// log p(x0 | x_t) + log p(y | x0) with the gradient projected onto the
/// subspace of the initial denoised estimate, then renoise to the next level.
SolveResult run_daps_style(const GmmPrior& prior, const ForwardOperator& op,
                           const Measurement& meas, const DapsParams& dp,
                           const GuidanceConfig& cfg, Rng& rng);

/// VE probability-flow ODE integrated from sigma to 0 with uniform Euler
/// steps; with the exact score this approximates E[x0 | x_t].
Mat pf_ode_denoise(const GmmPrior& prior, const Eigen::Ref<const Mat>& x,
                   double sigma, int steps);

}  // namespace dsg
