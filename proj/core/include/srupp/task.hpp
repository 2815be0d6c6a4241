// Copyright 2026 The srupp authors. Apache 2.0 License.
//
// Synthetic sequence tasks: one-hot symbol frames with per-frame labels.
//   copy:         target[t] = input symbol at t
//   delayed-echo: target[t] = input symbol at t - 3; the first 3 frames
//                 carry the padding label (vocab_size)
// Generation is pure given the seed.

#pragma once

#include <cstdint>
#include <vector>

#include "srupp/config.hpp"
#include "srupp/tensor.hpp"

namespace srupp {

inline constexpr std::int64_t kEchoLag = 3;

struct TaskSample {
  Tensor feats;                     // L x vocab_size one-hot frames
  std::vector<std::int64_t> labels; // length L
};

struct Dataset {
  std::vector<TaskSample> samples;
  std::int64_t vocab = 0;
  // delayed-echo uses one extra class for the leading padding frames
  std::int64_t num_classes = 0;
};

Dataset make_task(const TaskSpec& spec, Dtype dt = Dtype::F64);

// Same distribution at an arbitrary sequence length with a derived seed;
// used by length-generalization evaluation.
Dataset make_task_at_length(const TaskSpec& spec, std::int64_t length,
                            std::int64_t samples, Dtype dt = Dtype::F64);

}  // namespace srupp
