// Copyright (C) 2026 the diffstategrad authors
// SPDX-License-Identifier: Apache-2.0
#include "dsg/autoencoder.hpp"

#include <stdexcept>

namespace dsg {

Mat Autoencoder::encode(const Eigen::Ref<const Mat>& x) const {
  if (x.rows() != data_rows || x.cols() != data_cols)
    throw std::invalid_argument("Autoencoder::encode: shape mismatch");
  if (kind == Kind::Identity) return x;
  return unflatten(E * flatten(x), latent_rows, latent_cols);
}

Mat Autoencoder::decode(const Eigen::Ref<const Mat>& z) const {
  if (z.rows() != latent_rows || z.cols() != latent_cols)
    throw std::invalid_argument("Autoencoder::decode: shape mismatch");
  if (kind == Kind::Identity) return z;
  return unflatten(D * flatten(z), data_rows, data_cols);
}

Mat Autoencoder::decode_adjoint(const Eigen::Ref<const Mat>& gx) const {
  if (gx.rows() != data_rows || gx.cols() != data_cols)
    throw std::invalid_argument("Autoencoder::decode_adjoint: shape mismatch");
  if (kind == Kind::Identity) return gx;
  return unflatten(D.transpose() * flatten(gx), latent_rows, latent_cols);
}

Mat Autoencoder::encode_adjoint(const Eigen::Ref<const Mat>& gz) const {
  if (gz.rows() != latent_rows || gz.cols() != latent_cols)
    throw std::invalid_argument("Autoencoder::encode_adjoint: shape mismatch");
  if (kind == Kind::Identity) return gz;
  return unflatten(E.transpose() * flatten(gz), data_rows, data_cols);
}

Autoencoder Autoencoder::identity(Index rows, Index cols) {
  Autoencoder ae;
  ae.kind = Kind::Identity;
  ae.data_rows = ae.latent_rows = rows;
  ae.data_cols = ae.latent_cols = cols;
  return ae;
}

Autoencoder Autoencoder::fixed_linear(Index data_rows, Index data_cols,
                                      Index latent_dim, Rng& rng) {
  const Index n = data_rows * data_cols;
  if (latent_dim < 1 || latent_dim > n)
    throw std::invalid_argument("Autoencoder::fixed_linear: bad latent_dim");
  Autoencoder ae;
  ae.kind = Kind::FixedLinear;
  ae.data_rows = data_rows;
  ae.data_cols = data_cols;
  const auto [lr, lc] = most_square_shape(latent_dim);
  ae.latent_rows = lr;
  ae.latent_cols = lc;
  // Orthonormal rows via the QR of a Gaussian n x k block.
  const Mat G = randn_mat(rng, n, latent_dim);
  Eigen::HouseholderQR<Mat> qr(G);
  Mat Q = qr.householderQ() * Mat::Identity(n, latent_dim);
  ae.E = Q.transpose();
  ae.D = Q;
  return ae;
}

}  // namespace dsg
