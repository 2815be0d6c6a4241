// Copyright 2026 The srupp authors. Apache 2.0 License.
//
// CSV dumps and loads.  Numeric values are written with 17 significant
// digits so 64-bit values survive a round-trip.

#pragma once

#include <string>

#include "srupp/tensor.hpp"

namespace srupp {

std::string format_g17(double v);

// 2-D tensor -> one CSV row per tensor row.  Atomic (temp file + rename).
void write_matrix_csv(const std::string& path, const Tensor& m);

// Rectangular numeric CSV -> 2-D tensor of the requested dtype.
Tensor read_matrix_csv(const std::string& path, Dtype dt = Dtype::F64);

}  // namespace srupp
