// Copyright (C) 2026 the diffstategrad authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

#include "dsg/mat.hpp"

namespace dsg {

using Rng = std::mt19937_64;

inline double randn(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return n(rng);
}

inline Mat randn_mat(Rng& rng, Index rows, Index cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = n(rng);
  return m;
}

inline Vec randn_vec(Rng& rng, Index n) {
  return flatten(randn_mat(rng, n, 1));
}

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream derived from (seed, stream); callers own one Rng per
/// concurrent run and never share it.
inline Rng derive_rng(uint64_t seed, uint64_t stream) {
  return Rng(splitmix64(splitmix64(seed) ^ stream));
}

}  // namespace dsg
