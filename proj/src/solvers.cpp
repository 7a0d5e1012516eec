// Copyright (C) 2026 the diffstategrad authors
// SPDX-License-Identifier: Apache-2.0
#include "dsg/solvers.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "dsg/matrix_io.hpp"

namespace dsg {

namespace {

constexpr double kDivergenceNorm = 1e6;

bool state_ok(const Mat& z) {
  return z.allFinite() && z.norm() <= kDivergenceNorm;
}

// Projector for one guidance event under the configured subspace choice.
// Random subspaces draw from proj_rng so the main noise stream is identical
// across subspace arms under a shared seed.
std::optional<StateProjector> event_projector(const GuidanceConfig& cfg,
                                              const Mat& state, const Mat& grad,
                                              Rng& proj_rng) {
  switch (cfg.subspace) {
    case SubspaceChoice::None:
      return std::nullopt;
    case SubspaceChoice::State:
      return build_projector(state, cfg.tau, cfg.freq, cfg.mode);
    case SubspaceChoice::Random:
      return build_projector(randn_mat(proj_rng, state.rows(), state.cols()),
                             cfg.tau, cfg.freq, cfg.mode);
    case SubspaceChoice::Gradient:
      return build_projector(grad, cfg.tau, cfg.freq, cfg.mode);
  }
  return std::nullopt;
}

struct EventRecorder {
  const GuidanceConfig& cfg;
  Trajectory& traj;
  int counter = 0;

  // Applies the projection policy for this event and records diagnostics.
  // `subspace_state` feeds state/random subspaces; a cached projector (built
  // per level by the caller) wins over per-event construction.
  Mat guide(const Mat& grad, const Mat& subspace_state, int t, Rng& proj_rng,
            const StateProjector* cached) {
    const int event = counter++;
    Mat applied = grad;
    Index rank = 0;
    std::optional<StateProjector> proj;
    const bool project = cfg.projection_enabled &&
                         cfg.subspace != SubspaceChoice::None &&
                         (event % cfg.freq == 0);
    if (project) {
      if (cached != nullptr && cfg.subspace != SubspaceChoice::Gradient) {
        applied = project_gradient(grad, *cached);
        rank = cached->rank;
        if (cfg.record_matrices) proj = *cached;
      } else {
        auto p = event_projector(cfg, subspace_state, grad, proj_rng);
        if (p) {
          applied = project_gradient(grad, *p);
          rank = p->rank;
          if (cfg.record_matrices) proj = std::move(*p);
        }
      }
    }
    TrajectoryStep rec;
    rec.step = event;
    rec.t = t;
    rec.grad_norm = grad.norm();
    rec.proj_grad_norm = applied.norm();
    rec.rank = rank;
    if (cfg.record_matrices) {
      rec.applied_grad = applied;
      rec.projector = std::move(proj);
    }
    traj.steps.push_back(std::move(rec));
    return applied;
  }

  void snapshot(const Mat& state) {
    if (cfg.record_states && !traj.steps.empty()) traj.steps.back().state = state;
  }

  bool check_divergence(const Mat& state) {
    if (state_ok(state)) return false;
    traj.diverged = true;
    traj.diverged_step = counter - 1;
    return true;
  }
};

// grad of gamma-weighted gluing loss || z0 - E(A^T y + (I - A^T A) D(z0)) ||^2
// with respect to z0, for mask operators (A^T A = diagonal mask, A^T y = y).
Mat gluing_gradient(const Mat& z0hat, const ForwardOperator& op, const Mat& y,
                    const Autoencoder& ae) {
  const Mat keep = op.mask;
  const Mat drop = Mat::Ones(keep.rows(), keep.cols()) - keep;
  const Mat target = y + drop.cwiseProduct(ae.decode(z0hat));
  const Mat u = z0hat - ae.encode(target);
  return 2.0 * (u - ae.decode_adjoint(drop.cwiseProduct(ae.encode_adjoint(u))));
}

bool gluing_applicable(const ForwardOperator& op) {
  return op.kind == OpKind::BoxMask || op.kind == OpKind::RandomMask;
}

}  // namespace

std::string subspace_name(SubspaceChoice s) {
  switch (s) {
    case SubspaceChoice::State: return "state";
    case SubspaceChoice::Random: return "random";
    case SubspaceChoice::Gradient: return "gradient";
    case SubspaceChoice::None: return "none";
  }
  throw std::logic_error("subspace_name: unknown choice");
}

SubspaceChoice subspace_from_name(const std::string& name) {
  if (name == "state") return SubspaceChoice::State;
  if (name == "random") return SubspaceChoice::Random;
  if (name == "gradient") return SubspaceChoice::Gradient;
  if (name == "none") return SubspaceChoice::None;
  throw std::invalid_argument("unknown subspace choice: " + name);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const Mat* truth_state) {
  os << "step,t,grad_norm,proj_grad_norm,rank,state_rmse_to_truth\n";
  for (const auto& s : traj.steps) {
    double rmse = std::numeric_limits<double>::quiet_NaN();
    if (truth_state != nullptr && s.state.size() == truth_state->size())
      rmse = std::sqrt((s.state - *truth_state).squaredNorm() /
                       double(truth_state->size()));
    os << s.step << ',' << s.t << ',' << format_real(s.grad_norm) << ','
       << format_real(s.proj_grad_norm) << ',' << s.rank << ','
       << format_real(rmse) << '\n';
  }
}

SolveResult run_dps(const GmmPrior& prior, const ForwardOperator& op,
                    const Measurement& meas, const NoiseSchedule& sched,
                    const GuidanceConfig& cfg, const Autoencoder& ae, Rng& rng) {
  SolveResult res;
  EventRecorder rec{cfg, res.trajectory};
  Rng proj_rng(rng());

  Mat z = randn_mat(rng, prior.rows, prior.cols);
  for (int t = sched.T; t >= 1; --t) {
    const Mat z0hat = tweedie_denoise(prior, z, t, sched);
    Mat znext = ancestral_step(z, z0hat, t, sched, rng);
    const double eta = cfg.eta_at(rec.counter);
    if (eta != 0.0) {
      const Mat gx = data_fit_grad(op, ae.decode(z0hat), meas.y);
      const Mat g = tweedie_pullback(prior, z, t, sched, ae.decode_adjoint(gx));
      const Mat applied = rec.guide(g, z, t, proj_rng, nullptr);
      znext -= eta * applied;
    } else {
      rec.guide(Mat::Zero(z.rows(), z.cols()), z, t, proj_rng, nullptr);
    }
    rec.snapshot(znext);
    if (rec.check_divergence(znext)) break;
    z = znext;
  }
  res.x0_hat = ae.decode(z);
  return res;
}

SolveResult run_psld_style(const GmmPrior& prior, const ForwardOperator& op,
                           const Measurement& meas, const NoiseSchedule& sched,
                           const GuidanceConfig& cfg, double gluing_weight,
                           const Autoencoder& ae, Rng& rng) {
  SolveResult res;
  EventRecorder rec{cfg, res.trajectory};
  Rng proj_rng(rng());
  const bool glue = gluing_weight > 0.0 && gluing_applicable(op);

  Mat z = randn_mat(rng, prior.rows, prior.cols);
  for (int t = sched.T; t >= 1; --t) {
    const Mat z0hat = tweedie_denoise(prior, z, t, sched);
    const Mat zprime = ancestral_step(z, z0hat, t, sched, rng);
    const double eta = cfg.eta_at(rec.counter);

    Mat combined_z0 = Mat::Zero(prior.rows, prior.cols);
    if (eta != 0.0) {
      const Mat gx = data_fit_grad(op, ae.decode(z0hat), meas.y);
      combined_z0 += eta * 2.0 * ae.decode_adjoint(gx);
    }
    if (glue)
      combined_z0 += gluing_weight * gluing_gradient(z0hat, op, meas.y, ae);

    Mat znext = zprime;
    if (eta != 0.0 || glue) {
      const Mat g = tweedie_pullback(prior, z, t, sched, combined_z0);
      znext -= rec.guide(g, z, t, proj_rng, nullptr);
    } else {
      rec.guide(Mat::Zero(z.rows(), z.cols()), z, t, proj_rng, nullptr);
    }
    rec.snapshot(znext);
    if (rec.check_divergence(znext)) break;
    z = znext;
  }
  res.x0_hat = ae.decode(z);
  return res;
}

Mat stochastic_resample(const Eigen::Ref<const Mat>& z0_y,
                        const Eigen::Ref<const Mat>& z_prime_t, int t,
                        double gamma, const NoiseSchedule& sched, Rng& rng) {
  if (gamma <= 0.0)
    throw std::invalid_argument("stochastic_resample: gamma must be > 0");
  if (t < 0 || t > sched.T)
    throw std::out_of_range("stochastic_resample: step index out of range");
  const double abar = sched.alpha_bar[t];
  const double denom = gamma + 1.0 - abar;
  const Mat mean =
      (gamma * std::sqrt(abar) * z0_y + (1.0 - abar) * z_prime_t) / denom;
  const double var = gamma * (1.0 - abar) / denom;
  return mean + std::sqrt(var) * randn_mat(rng, z0_y.rows(), z0_y.cols());
}

SolveResult run_resample_style(const GmmPrior& prior, const ForwardOperator& op,
                               const Measurement& meas,
                               const NoiseSchedule& sched,
                               const GuidanceConfig& cfg,
                               const ResampleParams& rp, const Autoencoder& ae,
                               Rng& rng) {
  for (int c : rp.resample_steps)
    if (c < 0 || c >= sched.T)
      throw std::invalid_argument("run_resample_style: resample step out of range");

  SolveResult res;
  EventRecorder rec{cfg, res.trajectory};
  Rng proj_rng(rng());

  Mat z = randn_mat(rng, prior.rows, prior.cols);
  for (int t = sched.T; t >= 1; --t) {
    const Mat s = score(prior, z, t, sched);
    const Mat eps_hat = -std::sqrt(1.0 - sched.alpha_bar[t]) * s;
    const Mat z0hat = tweedie_denoise(prior, z, t, sched);
    const int tgt = t - 1;
    // sigma_0 = 0: the final step is always the deterministic DDIM limit.
    const double ddim_eta = (tgt == 0) ? 0.0 : rp.ddim_eta;
    const Mat zprime =
        ddim_step(z, z0hat, eps_hat, tgt, ddim_eta, rp.ddim_delta, sched, rng);

    const bool do_resample =
        std::find(rp.resample_steps.begin(), rp.resample_steps.end(), tgt) !=
        rp.resample_steps.end();
    if (do_resample) {
      Mat z0y = z0hat;
      // The projector is built once per resample step, from the current
      // diffusion state, not inside the descent loop.
      std::optional<StateProjector> cached;
      if (cfg.projection_enabled && (cfg.subspace == SubspaceChoice::State ||
                                     cfg.subspace == SubspaceChoice::Random))
        cached = event_projector(cfg, zprime, zprime, proj_rng);
      for (int j = 0; j < rp.gd_iters; ++j) {
        const Mat g =
            ae.decode_adjoint(data_fit_grad(op, ae.decode(z0y), meas.y));
        const Mat applied =
            rec.guide(g, zprime, tgt, proj_rng, cached ? &*cached : nullptr);
        z0y -= rp.gd_lr * applied;
        rec.snapshot(z0y);
        if (rec.check_divergence(z0y)) {
          res.x0_hat = ae.decode(z0y);
          return res;
        }
      }
      z = stochastic_resample(z0y, zprime, tgt, rp.gamma, sched, rng);
    } else {
      z = zprime;
    }
    if (!state_ok(z)) {
      res.trajectory.diverged = true;
      res.trajectory.diverged_step = rec.counter - 1;
      break;
    }
  }
  res.x0_hat = ae.decode(z);
  return res;
}

Vec DapsParams::geometric_sigmas(double sigma_max, double sigma_min, int levels) {
  if (levels < 1 || sigma_max <= sigma_min || sigma_min <= 0.0)
    throw std::invalid_argument("geometric_sigmas: bad parameters");
  Vec s(levels + 1);
  const double ratio = std::pow(sigma_min / sigma_max, 1.0 / double(levels - 1));
  for (int i = 0; i < levels; ++i) s[i] = sigma_max * std::pow(ratio, i);
  s[levels] = 0.0;  // final renoise level: return the clean estimate
  return s;
}

Mat pf_ode_denoise(const GmmPrior& prior, const Eigen::Ref<const Mat>& x,
                   double sigma, int steps) {
  if (steps < 1) throw std::invalid_argument("pf_ode_denoise: steps >= 1");
  // dx/dsigma = -sigma * score_ve(x, sigma), integrated down to 0.
  Mat cur = x;
  const double h = sigma / double(steps);
  for (int k = 0; k < steps; ++k) {
    const double s = sigma - k * h;
    cur += h * s * score_ve(prior, cur, s);
  }
  return cur;
}

SolveResult run_daps_style(const GmmPrior& prior, const ForwardOperator& op,
                           const Measurement& meas, const DapsParams& dp,
                           const GuidanceConfig& cfg, Rng& rng) {
  const Index L = dp.sigmas.size() - 1;
  if (L < 1) throw std::invalid_argument("run_daps_style: need >= 2 sigma levels");
  for (Index i = 1; i <= L; ++i)
    if (dp.sigmas[i] >= dp.sigmas[i - 1])
      throw std::invalid_argument("run_daps_style: sigmas must decrease");
  if (dp.likelihood_sigma <= 0.0)
    throw std::invalid_argument("run_daps_style: likelihood_sigma must be > 0");

  SolveResult res;
  EventRecorder rec{cfg, res.trajectory};
  Rng proj_rng(rng());

  Mat x = dp.sigmas[0] * randn_mat(rng, prior.rows, prior.cols);
  const double inv_noise2 =
      1.0 / (dp.likelihood_sigma * dp.likelihood_sigma);

  for (Index i = 0; i < L; ++i) {
    const double sigma = dp.sigmas[i];
    const Mat x0_ode = pf_ode_denoise(prior, x, sigma, dp.ode_steps);
    std::optional<StateProjector> cached;
    if (cfg.projection_enabled && (cfg.subspace == SubspaceChoice::State ||
                                   cfg.subspace == SubspaceChoice::Random))
      cached = event_projector(cfg, x0_ode, x0_ode, proj_rng);

    const double r = DapsParams::radius(sigma);
    Mat x0 = x0_ode;
    for (int j = 0; j < dp.langevin_iters; ++j) {
      // Ascent on log p(x0 | x_t) + log p(y | x0).
      Mat g = -(x0 - x0_ode) / (r * r);
      g -= data_fit_grad(op, x0, meas.y) * inv_noise2;
      const Mat applied =
          rec.guide(g, x0_ode, int(i), proj_rng, cached ? &*cached : nullptr);
      x0 += dp.langevin_step * applied +
            std::sqrt(2.0 * dp.langevin_step) *
                randn_mat(rng, prior.rows, prior.cols);
      rec.snapshot(x0);
      if (rec.check_divergence(x0)) {
        res.x0_hat = x0;
        return res;
      }
    }
    x = x0;
    if (dp.sigmas[i + 1] > 0.0)
      x += dp.sigmas[i + 1] * randn_mat(rng, prior.rows, prior.cols);
  }
  res.x0_hat = x;
  return res;
}

}  // namespace dsg
