// Copyright (C) 2026 the diffstategrad authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>

#include "dsg/mat.hpp"

namespace dsg {

// Matrix text format: first line "rows cols", then one row per line,
// entries as decimal floats separated by single spaces, 17 significant
// digits.

std::string format_real(double v);  // %.17g

void write_matrix(std::ostream& os, const Eigen::Ref<const Mat>& m);
void write_matrix_file(const std::string& path, const Eigen::Ref<const Mat>& m);
Mat read_matrix(std::istream& is);
Mat read_matrix_file(const std::string& path);

}  // namespace dsg
