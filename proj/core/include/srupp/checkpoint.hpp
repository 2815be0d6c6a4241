// Copyright 2026 The srupp authors. Apache 2.0 License.
//
// Binary checkpoint container for named tensors.
//
// Layout (all integers little-endian):
//   magic   4 bytes         "SRPP"
//   version u32             currently 1
//   count   u64             number of tensors
//   per tensor:
//     name_len u64, name bytes (UTF-8)
//     dtype    u64           0 = f32, 1 = f64
//     rank     u64
//     extents  u64 x rank
//     payload  raw little-endian values
//
// Round-trips are bitwise exact for both dtypes.  Files are written
// atomically (temp file + rename).  Corrupt or truncated files raise
// IoError naming the byte offset.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "srupp/tensor.hpp"

namespace srupp {

inline constexpr std::uint32_t kCheckpointVersion = 1;

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const Tensor*>>&
                         tensors);
void save_checkpoint(const std::string& path, const NamedTensors& tensors);

NamedTensors load_checkpoint(const std::string& path);

}  // namespace srupp
