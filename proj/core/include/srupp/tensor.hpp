// Copyright 2026 The srupp authors. Apache 2.0 License.
//
// Dense row-major tensors and the arithmetic primitives every other module
// builds on.  All operations are pure functions: values are immutable after
// construction and safe to share across threads.  Every operation checks its
// result for non-finite values and raises NumericError instead of letting
// NaN/Inf propagate silently.

#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "srupp/errors.hpp"
#include "srupp/rng.hpp"

namespace srupp {

enum class Dtype : std::uint8_t { F32 = 0, F64 = 1 };

const char* dtype_name(Dtype dt);
std::size_t dtype_size(Dtype dt);

// Execution regime.  Deterministic mode (the default, and the regime all
// tests run under) fixes summation order and keeps reductions on a single
// thread, so identical inputs give bitwise identical outputs.  Performance
// mode may partition independent output elements across threads.
enum class ExecMode { Deterministic, Performance };

void set_exec_mode(ExecMode m);
ExecMode exec_mode();

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<std::int64_t> shape, Dtype dt = Dtype::F64);
  static Tensor full(std::vector<std::int64_t> shape, double value,
                     Dtype dt = Dtype::F64);
  static Tensor from(std::vector<std::int64_t> shape,
                     std::vector<double> values, Dtype dt = Dtype::F64);
  static Tensor eye(std::int64_t n, Dtype dt = Dtype::F64);
  // Entries drawn independently from uniform(lo, hi), row-major order.
  static Tensor uniform(std::vector<std::int64_t> shape, SeededRng& rng,
                        double lo, double hi, Dtype dt = Dtype::F64);

  const std::vector<std::int64_t>& shape() const { return shape_; }
  std::int64_t dim(std::size_t i) const { return shape_.at(i); }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::int64_t size() const { return total_; }
  Dtype dtype() const { return dtype_; }

  template <typename T>
  std::span<const T> data() const {
    return std::span<const T>(std::get<std::vector<T>>(data_));
  }
  template <typename T>
  std::span<T> data() {
    return std::span<T>(std::get<std::vector<T>>(data_));
  }

  // Converting flat accessors; convenient for oracles, glue code, and tests.
  double get(std::int64_t i) const;
  void set(std::int64_t i, double v);
  double at(std::initializer_list<std::int64_t> idx) const;

  Tensor to(Dtype dt) const;
  // Same data, new extents; total size must match.
  Tensor reshaped(std::vector<std::int64_t> new_shape) const;

  std::string shape_str() const;

 private:
  std::vector<std::int64_t> shape_;
  Dtype dtype_ = Dtype::F64;
  std::int64_t total_ = 0;
  std::variant<std::vector<float>, std::vector<double>> data_ =
      std::vector<double>{};
};

// Exact comparison of dtype, shape, and raw value bits.
bool bitwise_equal(const Tensor& a, const Tensor& b);

// Throws NumericError naming `what` if any entry is not finite.
void check_finite(const Tensor& t, const char* what);

// ---------------------------------------------------------------------------
// Operations.  Operands must share a dtype; shape mismatches raise ShapeError
// naming both shapes.
// ---------------------------------------------------------------------------

enum class Elementwise { Add, Sub, Mul };

// [m x k] * [k x n] -> [m x n].  In deterministic mode the inner sum runs in
// ascending index order on one thread; performance mode partitions output
// rows across threads (the per-element summation order is unchanged).
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& a);  // 2-D only

// Elementwise with one documented broadcast: b of rank 1 and length equal to
// a's column count is applied to every row of a 2-D a (vector-over-rows).
Tensor elementwise(Elementwise op, const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& a, double s);
// alpha * x + y.
Tensor axpy(double alpha, const Tensor& x, const Tensor& y);
Tensor relu(const Tensor& a);

// Elementwise logistic function, saturating gracefully at the extremes.
Tensor sigmoid(const Tensor& a);

// Row-wise softmax of a 2-D tensor, computed with max subtraction.  Each
// output row is nonnegative and sums to 1.
Tensor softmax_rows(const Tensor& a);

// Valid 2-D cross-correlation.  input [c_in x T x F], kernels
// [c_out x c_in x 3 x 3], default stride 2; output extents are
// floor((T-1)/2) x floor((F-1)/2) at stride 2.
Tensor conv2d(const Tensor& input, const Tensor& kernels, int stride = 2);

// input [C x T x F] + bias [C], applied per channel.
Tensor add_channel_bias(const Tensor& input, const Tensor& bias);

// Data movement helpers (0 FLOPs).
Tensor reverse_rows(const Tensor& a);                    // 2-D, flips time
Tensor concat_cols(const Tensor& a, const Tensor& b);    // 2-D
Tensor slice_cols(const Tensor& a, std::int64_t begin, std::int64_t end);

// Deterministic ascending-order reduction.
double sum(const Tensor& a);

}  // namespace srupp
