// Copyright (C) 2026 the diffstategrad authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dsg/mat.hpp"
#include "dsg/rng.hpp"

namespace dsg {

/// Identity or fixed linear encoder/decoder pair between data space
/// (data_rows x data_cols) and latent space (latent_rows x latent_cols).
/// For the fixed linear kind, E has orthonormal rows and D = E^T, so
/// D([E(x)]) is an orthogonal projection of x and E(D(z)) = z exactly.
struct Autoencoder {
  enum class Kind { Identity, FixedLinear };
  Kind kind = Kind::Identity;
  Index data_rows = 0, data_cols = 0;
  Index latent_rows = 0, latent_cols = 0;
  Eigen::MatrixXd E;  // k x n, empty for identity
  Eigen::MatrixXd D;  // n x k, empty for identity

  Mat encode(const Eigen::Ref<const Mat>& x) const;
  Mat decode(const Eigen::Ref<const Mat>& z) const;
  /// D^T applied to a data-space gradient; latent-shaped result.
  Mat decode_adjoint(const Eigen::Ref<const Mat>& gx) const;
  /// E^T applied to a latent-space gradient; data-shaped result.
  Mat encode_adjoint(const Eigen::Ref<const Mat>& gz) const;

  static Autoencoder identity(Index rows, Index cols);
  static Autoencoder fixed_linear(Index data_rows, Index data_cols,
                                  Index latent_dim, Rng& rng);
};

}  // namespace dsg
