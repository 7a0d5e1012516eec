// Copyright (C) 2026 the diffstategrad authors
// SPDX-License-Identifier: Apache-2.0
#include "dsg/gmm.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "dsg/matrix_io.hpp"

namespace dsg {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

struct ComponentStats {
  Vec log_post;       // log w_i + log N(x; m_i, C_i), K entries
  std::vector<Vec> whitened;  // C_i^{-1} (x - m_i)
  std::vector<Eigen::LDLT<Eigen::MatrixXd>> ldlt;
  double log_density = 0.0;
  Vec resp;           // softmax responsibilities
};

// Per-component Gaussian evaluation of the noised marginal
// N(scale mu_i, scale^2 Sigma_i + noise_var I).
ComponentStats component_stats(const GmmPrior& prior, const Eigen::Ref<const Mat>& x,
                               double scale, double noise_var) {
  const Index d = prior.dim();
  const Index K = prior.components();
  const Vec xv = flatten(x);

  ComponentStats st;
  st.log_post.resize(K);
  st.whitened.resize(K);
  st.ldlt.resize(K);
  for (Index i = 0; i < K; ++i) {
    Eigen::MatrixXd C = (scale * scale) * prior.covariances[i];
    C.diagonal().array() += noise_var;
    st.ldlt[i].compute(C);
    if (st.ldlt[i].info() != Eigen::Success)
      throw std::runtime_error("gmm: covariance factorization failed");
    const Vec diff = xv - scale * flatten(prior.means[i]);
    st.whitened[i] = st.ldlt[i].solve(diff);
    const double logdet = st.ldlt[i].vectorD().array().log().sum();
    const double quad = diff.dot(st.whitened[i]);
    st.log_post[i] = std::log(prior.weights[i]) -
                     0.5 * (double(d) * kLog2Pi + logdet + quad);
  }
  const double m = st.log_post.maxCoeff();
  st.log_density = m + std::log((st.log_post.array() - m).exp().sum());
  st.resp = (st.log_post.array() - st.log_density).exp();
  return st;
}

}  // namespace

GmmPrior GmmPrior::isotropic(Vec weights, std::vector<Mat> means, double eps) {
  if (means.empty() || weights.size() != Index(means.size()))
    throw std::invalid_argument("GmmPrior: weights/means size mismatch");
  if (eps < 0.0) throw std::invalid_argument("GmmPrior: negative covariance");
  GmmPrior p;
  p.rows = means[0].rows();
  p.cols = means[0].cols();
  p.weights = weights / weights.sum();
  p.means = std::move(means);
  const Index d = p.rows * p.cols;
  p.covariances.assign(p.means.size(), eps * Eigen::MatrixXd::Identity(d, d));
  return p;
}

GmmPrior GmmPrior::random_low_rank(int K, Index rows, Index cols, int rank,
                                   double cov_eps, Rng& rng) {
  std::vector<Mat> means;
  means.reserve(K);
  const double target = std::sqrt(double(rows * cols));
  for (int i = 0; i < K; ++i) {
    Mat m = Mat::Zero(rows, cols);
    for (int r = 0; r < rank; ++r) {
      Vec u = randn_vec(rng, rows);
      Vec v = randn_vec(rng, cols);
      m += u * v.transpose();
    }
    m *= target / m.norm();
    means.push_back(std::move(m));
  }
  return isotropic(Vec::Ones(K), std::move(means), cov_eps);
}

double mixture_log_density(const GmmPrior& prior, const Eigen::Ref<const Mat>& x,
                           double scale, double noise_var) {
  return component_stats(prior, x, scale, noise_var).log_density;
}

Mat mixture_score(const GmmPrior& prior, const Eigen::Ref<const Mat>& x,
                  double scale, double noise_var) {
  const auto st = component_stats(prior, x, scale, noise_var);
  Vec g = Vec::Zero(prior.dim());
  for (Index i = 0; i < prior.components(); ++i) g -= st.resp[i] * st.whitened[i];
  return unflatten(g, prior.rows, prior.cols);
}

Eigen::MatrixXd mixture_log_hessian(const GmmPrior& prior,
                                    const Eigen::Ref<const Mat>& x,
                                    double scale, double noise_var) {
  const Index d = prior.dim();
  const auto st = component_stats(prior, x, scale, noise_var);
  Vec s = Vec::Zero(d);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(d, d);
  for (Index i = 0; i < prior.components(); ++i) {
    const Vec si = -st.whitened[i];
    s += st.resp[i] * si;
    // sum_i r_i (s_i s_i^T - C_i^{-1})
    H.noalias() += st.resp[i] * (si * si.transpose());
    H -= st.resp[i] * st.ldlt[i].solve(Eigen::MatrixXd::Identity(d, d));
  }
  H.noalias() -= s * s.transpose();
  return H;
}

Mat score(const GmmPrior& prior, const Eigen::Ref<const Mat>& x, int t,
          const NoiseSchedule& sched) {
  const double abar = sched.alpha_bar[t];
  return mixture_score(prior, x, std::sqrt(abar), 1.0 - abar);
}

Mat score_ve(const GmmPrior& prior, const Eigen::Ref<const Mat>& x, double sigma) {
  return mixture_score(prior, x, 1.0, sigma * sigma);
}

Mat tweedie_denoise(const GmmPrior& prior, const Eigen::Ref<const Mat>& x_t,
                    int t, const NoiseSchedule& sched) {
  const double abar = sched.alpha_bar[t];
  if (abar >= 1.0) return x_t;
  return (x_t + (1.0 - abar) * score(prior, x_t, t, sched)) / std::sqrt(abar);
}

Mat tweedie_denoise_ve(const GmmPrior& prior, const Eigen::Ref<const Mat>& x_t,
                       double sigma) {
  if (sigma == 0.0) return x_t;
  return x_t + sigma * sigma * score_ve(prior, x_t, sigma);
}

Mat tweedie_pullback(const GmmPrior& prior, const Eigen::Ref<const Mat>& x_t,
                     int t, const NoiseSchedule& sched,
                     const Eigen::Ref<const Mat>& grad_at_x0) {
  const double abar = sched.alpha_bar[t];
  const Vec g = flatten(grad_at_x0);
  if (abar >= 1.0) return grad_at_x0;
  const Eigen::MatrixXd H =
      mixture_log_hessian(prior, x_t, std::sqrt(abar), 1.0 - abar);
  // J = (I + (1-abar) H)/sqrt(abar) is symmetric, so J^T g = J g.
  const Vec out = (g + (1.0 - abar) * (H * g)) / std::sqrt(abar);
  return unflatten(out, prior.rows, prior.cols);
}

PosteriorGmm exact_linear_posterior(const GmmPrior& prior,
                                    const Eigen::Ref<const Eigen::MatrixXd>& A,
                                    const Eigen::Ref<const Vec>& y,
                                    double noise_sigma) {
  if (noise_sigma <= 0.0)
    throw std::invalid_argument("exact_linear_posterior: noise_sigma must be > 0");
  if (A.cols() != prior.dim() || A.rows() != y.size())
    throw std::invalid_argument("exact_linear_posterior: operator shape mismatch");

  const Index K = prior.components();
  const Index m = A.rows();
  PosteriorGmm post;
  post.rows = prior.rows;
  post.cols = prior.cols;
  post.weights.resize(K);
  post.means.resize(K);
  post.covariances.resize(K);

  Vec log_ev(K);
  for (Index i = 0; i < K; ++i) {
    const Vec mu = flatten(prior.means[i]);
    const Eigen::MatrixXd& Sig = prior.covariances[i];
    Eigen::MatrixXd S = A * Sig * A.transpose();  // innovation covariance
    S.diagonal().array() += noise_sigma * noise_sigma;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
    if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any())
      throw std::runtime_error(
          "exact_linear_posterior: singular innovation covariance at component " +
          std::to_string(i));
    const Vec resid = y - A * mu;
    const Vec w = ldlt.solve(resid);
    const double logdet = ldlt.vectorD().array().log().sum();
    log_ev[i] = std::log(prior.weights[i]) -
                0.5 * (double(m) * kLog2Pi + logdet + resid.dot(w));

    const Eigen::MatrixXd K_gain = Sig * A.transpose() * ldlt.solve(
        Eigen::MatrixXd::Identity(m, m));
    const Vec mean = mu + K_gain * resid;
    Eigen::MatrixXd cov = Sig - K_gain * A * Sig;
    cov = 0.5 * (cov + cov.transpose());  // symmetrize rounding residue
    post.means[i] = unflatten(mean, prior.rows, prior.cols);
    post.covariances[i] = std::move(cov);
  }
  const double mx = log_ev.maxCoeff();
  Vec w = (log_ev.array() - mx).exp();
  post.weights = w / w.sum();
  return post;
}

Mat sample(const GmmPrior& prior, Rng& rng) {
  // Component index by inverse CDF on one uniform draw.
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  Index pick = prior.components() - 1;
  double acc = 0.0;
  for (Index i = 0; i < prior.components(); ++i) {
    acc += prior.weights[i];
    if (u <= acc) {
      pick = i;
      break;
    }
  }
  Vec z = randn_vec(rng, prior.dim());
  Vec x = flatten(prior.means[pick]);
  if (prior.covariances[pick].cwiseAbs().maxCoeff() > 0.0) {
    // Eigendecomposition square root handles semidefinite covariances.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(prior.covariances[pick]);
    const Vec lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    x += es.eigenvectors() * lam.asDiagonal() * z;
  }
  return unflatten(x, prior.rows, prior.cols);
}

Mat mixture_mean(const GmmPrior& prior) {
  Mat m = Mat::Zero(prior.rows, prior.cols);
  for (Index i = 0; i < prior.components(); ++i)
    m += prior.weights[i] * prior.means[i];
  return m;
}

double mixture_cov_trace(const GmmPrior& prior) {
  // tr Cov = sum_i w_i (tr Sigma_i + |mu_i|^2) - |mean|^2
  double tr = 0.0;
  for (Index i = 0; i < prior.components(); ++i)
    tr += prior.weights[i] *
          (prior.covariances[i].trace() + flatten(prior.means[i]).squaredNorm());
  return tr - flatten(mixture_mean(prior)).squaredNorm();
}

void save_gmm(std::ostream& os, const GmmPrior& prior) {
  const Index d = prior.dim();
  os << "gmm " << prior.components() << ' ' << prior.rows << ' ' << prior.cols
     << '\n';
  for (Index i = 0; i < prior.components(); ++i) {
    if (i) os << ' ';
    os << format_real(prior.weights[i]);
  }
  os << '\n';
  for (Index i = 0; i < prior.components(); ++i) {
    const Eigen::MatrixXd& S = prior.covariances[i];
    const double s00 = S(0, 0);
    const bool scalar = (S - s00 * Eigen::MatrixXd::Identity(d, d)).norm() == 0.0;
    if (scalar) {
      os << "cov scalar " << format_real(s00) << '\n';
    } else {
      os << "cov full\n";
      write_matrix(os, S);
    }
    write_matrix(os, prior.means[i]);
  }
}

void save_gmm_file(const std::string& path, const GmmPrior& prior) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_gmm_file: cannot open " + path);
  save_gmm(f, prior);
}

GmmPrior load_gmm(std::istream& is) {
  std::string tag;
  Index K = 0, rows = 0, cols = 0;
  if (!(is >> tag >> K >> rows >> cols) || tag != "gmm" || K < 1)
    throw std::runtime_error("load_gmm: bad header");
  GmmPrior p;
  p.rows = rows;
  p.cols = cols;
  p.weights.resize(K);
  for (Index i = 0; i < K; ++i)
    if (!(is >> p.weights[i])) throw std::runtime_error("load_gmm: bad weights");
  const Index d = rows * cols;
  for (Index i = 0; i < K; ++i) {
    std::string cov_tag, cov_kind;
    if (!(is >> cov_tag >> cov_kind) || cov_tag != "cov")
      throw std::runtime_error("load_gmm: bad covariance tag");
    if (cov_kind == "scalar") {
      double v = 0.0;
      if (!(is >> v)) throw std::runtime_error("load_gmm: bad scalar covariance");
      p.covariances.push_back(v * Eigen::MatrixXd::Identity(d, d));
    } else if (cov_kind == "full") {
      p.covariances.push_back(read_matrix(is));
    } else {
      throw std::runtime_error("load_gmm: unknown covariance kind " + cov_kind);
    }
    p.means.push_back(read_matrix(is));
  }
  return p;
}

GmmPrior load_gmm_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_gmm_file: cannot open " + path);
  return load_gmm(f);
}

}  // namespace dsg
