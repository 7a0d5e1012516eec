// Copyright (C) 2026 the diffstategrad authors
// SPDX-License-Identifier: Apache-2.0
#include "dsg/matrix_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dsg {

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_matrix(std::ostream& os, const Eigen::Ref<const Mat>& m) {
  os << m.rows() << ' ' << m.cols() << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) os << ' ';
      os << format_real(m(i, j));
    }
    os << '\n';
  }
}

void write_matrix_file(const std::string& path, const Eigen::Ref<const Mat>& m) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_matrix_file: cannot open " + path);
  write_matrix(f, m);
}

Mat read_matrix(std::istream& is) {
  Index rows = 0, cols = 0;
  if (!(is >> rows >> cols) || rows < 1 || cols < 1)
    throw std::runtime_error("read_matrix: bad header");
  Mat m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j)
      if (!(is >> m(i, j))) throw std::runtime_error("read_matrix: truncated data");
  return m;
}

Mat read_matrix_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("read_matrix_file: cannot open " + path);
  return read_matrix(f);
}

}  // namespace dsg
