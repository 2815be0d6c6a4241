// Copyright 2026 The srupp authors. Apache 2.0 License.
//
// Forward-FLOP accounting.
//
// The cost formulas below are the single source of truth for both the
// instrumented execution counters (tensor ops call flops::add with these
// formulas) and the analytic profiler (profile.cpp replays the same
// formulas symbolically).  Conventions:
//   - one multiply-accumulate = 2 FLOPs
//   - exp, add, mul, div, sqrt, compare = 1 FLOP each
//   - data movement (transpose, reshape, slice, reverse, concat) = 0 FLOPs

#pragma once

#include <cstdint>

namespace srupp::flops {

using u64 = std::uint64_t;

// RAII activation of FLOP counting on the current thread.  Counts go to the
// innermost active scope only; destruction restores the enclosing scope, so
// concurrent profiled calls on distinct threads never share state.
class Scope {
 public:
  Scope();
  ~Scope();
  Scope(const Scope&) = delete;
  Scope& operator=(const Scope&) = delete;

  u64 total() const { return count_; }

 private:
  u64 count_ = 0;
  Scope* prev_;

  friend void add(u64);
};

// No-op when no scope is active on this thread.
void add(u64 n);

constexpr u64 matmul(u64 m, u64 k, u64 n) { return 2 * m * k * n; }

// add/sub/mul, relu, scale, bias broadcast: 1 FLOP per output element.
constexpr u64 elementwise(u64 n) { return n; }

// y + a*x: 2 FLOPs per element.
constexpr u64 axpy(u64 n) { return 2 * n; }

// Per element: exp, add, div.
constexpr u64 sigmoid(u64 n) { return 3 * n; }

// Per element: max scan, subtract, exp, sum, divide.
constexpr u64 softmax_rows(u64 m, u64 n) { return 5 * m * n; }

// 3x3 kernel, valid, MAC = 2.
constexpr u64 conv2d(u64 c_out, u64 c_in, u64 t_out, u64 f_out) {
  return 18 * c_in * c_out * t_out * f_out;
}

// Per row: mean (n+1), variance (3n+1), inverse stddev (3),
// normalize + affine (4n).
constexpr u64 layer_norm_rows(u64 m, u64 n) { return m * (8 * n + 5); }

// Elementwise recurrence, counted from its operation list: the two gates
// cost 6 FLOPs per element each (mul, add, add, 3-FLOP sigmoid), the cell
// and output mixes cost 4 each.
constexpr u64 sru_recurrence(u64 steps, u64 dim) { return 20 * steps * dim; }

}  // namespace srupp::flops
