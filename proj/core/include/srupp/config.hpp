// Copyright 2026 The srupp authors. Apache 2.0 License.
//
// Flat key = value run configuration.  Every key has a documented default;
// unknown or duplicate keys are rejected, never silently ignored.  Rendering
// is canonical, so parse -> render -> parse is the identity.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "srupp/encoder.hpp"

namespace srupp {

enum class TaskKind { Copy, DelayedEcho };

struct TaskSpec {
  TaskKind kind = TaskKind::Copy;
  std::int64_t vocab_size = 8;
  std::int64_t train_len = 40;
  std::int64_t eval_len = 120;
  std::int64_t samples = 256;
  std::uint64_t seed = 1;

  void validate() const;  // vocab >= 2, eval_len >= train_len, ...

  bool operator==(const TaskSpec&) const = default;
};

struct TrainConfig {
  std::int64_t steps = 2000;
  std::int64_t batch_size = 8;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 5.0;
  Dtype dtype = Dtype::F64;
  std::uint64_t seed = 0;

  void validate() const;

  bool operator==(const TrainConfig&) const = default;
};

struct RunConfig {
  EncoderConfig encoder;
  TaskSpec task;
  TrainConfig train;

  static RunConfig parse(std::string_view text);
  static RunConfig parse_file(const std::string& path);
  std::string render() const;
  void validate() const;

  bool operator==(const RunConfig&) const = default;
};

}  // namespace srupp
