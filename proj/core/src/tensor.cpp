// Copyright 2026 The srupp authors. Apache 2.0 License.

#include "srupp/tensor.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <sstream>
#include <thread>

#include "srupp/flops.hpp"

namespace srupp {

namespace {

std::atomic<ExecMode> g_exec_mode{ExecMode::Deterministic};

template <typename T>
struct tag {
  using type = T;
};

// Dispatch a generic lambda on the runtime dtype.
template <typename F>
decltype(auto) dispatch(Dtype dt, F&& f) {
  if (dt == Dtype::F32) return f(tag<float>{});
  return f(tag<double>{});
}

std::int64_t product(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

void require_positive_extents(const std::vector<std::int64_t>& shape) {
  for (auto e : shape) {
    if (e <= 0) throw ShapeError("tensor extents must be positive");
  }
}

[[noreturn]] void shape_mismatch(const char* op, const Tensor& a,
                                 const Tensor& b) {
  throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() +
                   " vs " + b.shape_str());
}

void require_same_dtype(const char* op, const Tensor& a, const Tensor& b) {
  if (a.dtype() != b.dtype()) {
    throw ShapeError(std::string(op) + ": dtype mismatch " +
                     dtype_name(a.dtype()) + " vs " + dtype_name(b.dtype()));
  }
}

// Row partition [0, m) across worker threads in performance mode.  Each
// output element is still reduced in ascending order, so the split never
// changes per-element results.
template <typename Fn>
void parallel_rows(std::int64_t m, std::int64_t work_per_row, Fn&& fn) {
  const std::int64_t kMinWork = 1 << 18;
  unsigned hw = std::thread::hardware_concurrency();
  if (exec_mode() == ExecMode::Deterministic || hw < 2 ||
      m * work_per_row < kMinWork) {
    fn(0, m);
    return;
  }
  std::int64_t workers = std::min<std::int64_t>(hw, m);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  std::int64_t chunk = (m + workers - 1) / workers;
  for (std::int64_t w = 0; w < workers; ++w) {
    std::int64_t lo = w * chunk;
    std::int64_t hi = std::min(m, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

template <typename T>
T stable_sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  T e = std::exp(x);
  return e / (T(1) + e);
}

}  // namespace

const char* dtype_name(Dtype dt) { return dt == Dtype::F32 ? "f32" : "f64"; }

std::size_t dtype_size(Dtype dt) {
  return dt == Dtype::F32 ? sizeof(float) : sizeof(double);
}

void set_exec_mode(ExecMode m) { g_exec_mode.store(m); }
ExecMode exec_mode() { return g_exec_mode.load(); }

Tensor Tensor::zeros(std::vector<std::int64_t> shape, Dtype dt) {
  require_positive_extents(shape);
  Tensor t;
  t.shape_ = std::move(shape);
  t.total_ = product(t.shape_);
  t.dtype_ = dt;
  dispatch(dt, [&](auto g) {
    using T = typename decltype(g)::type;
    t.data_ = std::vector<T>(static_cast<std::size_t>(t.total_), T(0));
  });
  return t;
}

Tensor Tensor::full(std::vector<std::int64_t> shape, double value, Dtype dt) {
  Tensor t = zeros(std::move(shape), dt);
  for (std::int64_t i = 0; i < t.size(); ++i) t.set(i, value);
  return t;
}

Tensor Tensor::from(std::vector<std::int64_t> shape, std::vector<double> values,
                    Dtype dt) {
  Tensor t = zeros(std::move(shape), dt);
  if (static_cast<std::int64_t>(values.size()) != t.size()) {
    throw ShapeError("Tensor::from: " + std::to_string(values.size()) +
                     " values for shape " + t.shape_str());
  }
  for (std::int64_t i = 0; i < t.size(); ++i) t.set(i, values[i]);
  return t;
}

Tensor Tensor::eye(std::int64_t n, Dtype dt) {
  Tensor t = zeros({n, n}, dt);
  for (std::int64_t i = 0; i < n; ++i) t.set(i * n + i, 1.0);
  return t;
}

Tensor Tensor::uniform(std::vector<std::int64_t> shape, SeededRng& rng,
                       double lo, double hi, Dtype dt) {
  Tensor t = zeros(std::move(shape), dt);
  for (std::int64_t i = 0; i < t.size(); ++i) t.set(i, rng.uniform(lo, hi));
  return t;
}

double Tensor::get(std::int64_t i) const {
  return dispatch(dtype_, [&](auto g) {
    using T = typename decltype(g)::type;
    return static_cast<double>(std::get<std::vector<T>>(data_)[
        static_cast<std::size_t>(i)]);
  });
}

void Tensor::set(std::int64_t i, double v) {
  dispatch(dtype_, [&](auto g) {
    using T = typename decltype(g)::type;
    std::get<std::vector<T>>(data_)[static_cast<std::size_t>(i)] =
        static_cast<T>(v);
  });
}

double Tensor::at(std::initializer_list<std::int64_t> idx) const {
  if (static_cast<int>(idx.size()) != rank()) {
    throw ShapeError("Tensor::at: rank mismatch for shape " + shape_str());
  }
  std::int64_t flat = 0;
  std::size_t k = 0;
  for (auto i : idx) {
    if (i < 0 || i >= shape_[k]) {
      throw ShapeError("Tensor::at: index out of range for " + shape_str());
    }
    flat = flat * shape_[k] + i;
    ++k;
  }
  return get(flat);
}

Tensor Tensor::to(Dtype dt) const {
  if (dt == dtype_) return *this;
  Tensor t = zeros(shape_, dt);
  for (std::int64_t i = 0; i < total_; ++i) t.set(i, get(i));
  return t;
}

Tensor Tensor::reshaped(std::vector<std::int64_t> new_shape) const {
  require_positive_extents(new_shape);
  if (product(new_shape) != total_) {
    throw ShapeError("reshape: size mismatch for " + shape_str());
  }
  Tensor t = *this;
  t.shape_ = std::move(new_shape);
  return t;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << 'x';
    os << shape_[i];
  }
  os << ']';
  return os.str();
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (a.dtype() != b.dtype() || a.shape() != b.shape()) return false;
  return dispatch(a.dtype(), [&](auto g) {
    using T = typename decltype(g)::type;
    auto sa = a.data<T>();
    auto sb = b.data<T>();
    return std::memcmp(sa.data(), sb.data(), sa.size() * sizeof(T)) == 0;
  });
}

void check_finite(const Tensor& t, const char* what) {
  dispatch(t.dtype(), [&](auto g) {
    using T = typename decltype(g)::type;
    auto s = t.data<T>();
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!std::isfinite(s[i])) {
        throw NumericError(std::string(what) +
                           ": non-finite value at flat index " +
                           std::to_string(i));
      }
    }
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    shape_mismatch("matmul", a, b);
  }
  require_same_dtype("matmul", a, b);
  const std::int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out = Tensor::zeros({m, n}, a.dtype());
  dispatch(a.dtype(), [&](auto g) {
    using T = typename decltype(g)::type;
    auto pa = a.data<T>();
    auto pb = b.data<T>();
    auto po = out.data<T>();
    parallel_rows(m, k * n, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t i = lo; i < hi; ++i) {
        for (std::int64_t j = 0; j < n; ++j) {
          T acc = T(0);
          for (std::int64_t p = 0; p < k; ++p) {
            acc += pa[i * k + p] * pb[p * n + j];
          }
          po[i * n + j] = acc;
        }
      }
    });
  });
  flops::add(flops::matmul(m, k, n));
  check_finite(out, "matmul");
  return out;
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw ShapeError("transpose: need rank 2, got " + a.shape_str());
  const std::int64_t m = a.dim(0), n = a.dim(1);
  Tensor out = Tensor::zeros({n, m}, a.dtype());
  dispatch(a.dtype(), [&](auto g) {
    using T = typename decltype(g)::type;
    auto pa = a.data<T>();
    auto po = out.data<T>();
    for (std::int64_t i = 0; i < m; ++i) {
      for (std::int64_t j = 0; j < n; ++j) po[j * m + i] = pa[i * n + j];
    }
  });
  return out;
}

Tensor elementwise(Elementwise op, const Tensor& a, const Tensor& b) {
  require_same_dtype("elementwise", a, b);
  const bool rowvec = a.rank() == 2 && b.rank() == 1 && b.dim(0) == a.dim(1);
  if (!rowvec && a.shape() != b.shape()) shape_mismatch("elementwise", a, b);
  Tensor out = Tensor::zeros(a.shape(), a.dtype());
  dispatch(a.dtype(), [&](auto g) {
    using T = typename decltype(g)::type;
    auto pa = a.data<T>();
    auto pb = b.data<T>();
    auto po = out.data<T>();
    const std::int64_t n = a.size();
    const std::int64_t cols = rowvec ? a.dim(1) : 0;
    for (std::int64_t i = 0; i < n; ++i) {
      T rhs = rowvec ? pb[i % cols] : pb[i];
      switch (op) {
        case Elementwise::Add: po[i] = pa[i] + rhs; break;
        case Elementwise::Sub: po[i] = pa[i] - rhs; break;
        case Elementwise::Mul: po[i] = pa[i] * rhs; break;
      }
    }
  });
  flops::add(flops::elementwise(a.size()));
  check_finite(out, "elementwise");
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) { return elementwise(Elementwise::Add, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(Elementwise::Sub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(Elementwise::Mul, a, b); }

Tensor scale(const Tensor& a, double s) {
  Tensor out = Tensor::zeros(a.shape(), a.dtype());
  dispatch(a.dtype(), [&](auto g) {
    using T = typename decltype(g)::type;
    auto pa = a.data<T>();
    auto po = out.data<T>();
    const T f = static_cast<T>(s);
    for (std::int64_t i = 0; i < a.size(); ++i) po[i] = pa[i] * f;
  });
  flops::add(flops::elementwise(a.size()));
  check_finite(out, "scale");
  return out;
}

Tensor axpy(double alpha, const Tensor& x, const Tensor& y) {
  if (x.shape() != y.shape()) shape_mismatch("axpy", x, y);
  require_same_dtype("axpy", x, y);
  Tensor out = Tensor::zeros(x.shape(), x.dtype());
  dispatch(x.dtype(), [&](auto g) {
    using T = typename decltype(g)::type;
    auto px = x.data<T>();
    auto py = y.data<T>();
    auto po = out.data<T>();
    const T f = static_cast<T>(alpha);
    for (std::int64_t i = 0; i < x.size(); ++i) po[i] = f * px[i] + py[i];
  });
  flops::add(flops::axpy(x.size()));
  check_finite(out, "axpy");
  return out;
}

Tensor relu(const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape(), a.dtype());
  dispatch(a.dtype(), [&](auto g) {
    using T = typename decltype(g)::type;
    auto pa = a.data<T>();
    auto po = out.data<T>();
    for (std::int64_t i = 0; i < a.size(); ++i)
      po[i] = pa[i] > T(0) ? pa[i] : T(0);
  });
  flops::add(flops::elementwise(a.size()));
  check_finite(out, "relu");
  return out;
}

Tensor sigmoid(const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape(), a.dtype());
  dispatch(a.dtype(), [&](auto g) {
    using T = typename decltype(g)::type;
    auto pa = a.data<T>();
    auto po = out.data<T>();
    for (std::int64_t i = 0; i < a.size(); ++i) po[i] = stable_sigmoid(pa[i]);
  });
  flops::add(flops::sigmoid(a.size()));
  check_finite(out, "sigmoid");
  return out;
}

Tensor softmax_rows(const Tensor& a) {
  if (a.rank() != 2) throw ShapeError("softmax_rows: need rank 2, got " + a.shape_str());
  check_finite(a, "softmax_rows input");
  const std::int64_t m = a.dim(0), n = a.dim(1);
  Tensor out = Tensor::zeros(a.shape(), a.dtype());
  dispatch(a.dtype(), [&](auto g) {
    using T = typename decltype(g)::type;
    auto pa = a.data<T>();
    auto po = out.data<T>();
    for (std::int64_t i = 0; i < m; ++i) {
      const T* row = pa.data() + i * n;
      T* orow = po.data() + i * n;
      T mx = row[0];
      for (std::int64_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
      T total = T(0);
      for (std::int64_t j = 0; j < n; ++j) {
        orow[j] = std::exp(row[j] - mx);
        total += orow[j];
      }
      for (std::int64_t j = 0; j < n; ++j) orow[j] /= total;
    }
  });
  flops::add(flops::softmax_rows(m, n));
  check_finite(out, "softmax_rows");
  return out;
}

Tensor conv2d(const Tensor& input, const Tensor& kernels, int stride) {
  if (input.rank() != 3 || kernels.rank() != 4) {
    shape_mismatch("conv2d", input, kernels);
  }
  if (kernels.dim(2) != 3 || kernels.dim(3) != 3) {
    throw ShapeError("conv2d: kernels must be 3x3, got " + kernels.shape_str());
  }
  if (stride < 1) throw ShapeError("conv2d: stride must be >= 1");
  if (input.dim(0) != kernels.dim(1)) shape_mismatch("conv2d", input, kernels);
  require_same_dtype("conv2d", input, kernels);
  const std::int64_t c_in = input.dim(0), t_in = input.dim(1),
                     f_in = input.dim(2);
  const std::int64_t c_out = kernels.dim(0);
  if (t_in < 3 || f_in < 3) {
    throw ShapeError("conv2d: input " + input.shape_str() +
                     " smaller than 3x3 kernel");
  }
  const std::int64_t t_out = (t_in - 3) / stride + 1;
  const std::int64_t f_out = (f_in - 3) / stride + 1;
  Tensor out = Tensor::zeros({c_out, t_out, f_out}, input.dtype());
  dispatch(input.dtype(), [&](auto g) {
    using T = typename decltype(g)::type;
    auto pin = input.data<T>();
    auto pk = kernels.data<T>();
    auto po = out.data<T>();
    parallel_rows(c_out, 18 * c_in * t_out * f_out,
                  [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t co = lo; co < hi; ++co) {
        for (std::int64_t to = 0; to < t_out; ++to) {
          for (std::int64_t fo = 0; fo < f_out; ++fo) {
            T acc = T(0);
            for (std::int64_t ci = 0; ci < c_in; ++ci) {
              for (std::int64_t ki = 0; ki < 3; ++ki) {
                for (std::int64_t kj = 0; kj < 3; ++kj) {
                  acc += pin[(ci * t_in + to * stride + ki) * f_in +
                             fo * stride + kj] *
                         pk[((co * c_in + ci) * 3 + ki) * 3 + kj];
                }
              }
            }
            po[(co * t_out + to) * f_out + fo] = acc;
          }
        }
      }
    });
  });
  flops::add(flops::conv2d(c_out, c_in, t_out, f_out));
  check_finite(out, "conv2d");
  return out;
}

Tensor add_channel_bias(const Tensor& input, const Tensor& bias) {
  if (input.rank() != 3 || bias.rank() != 1 || bias.dim(0) != input.dim(0)) {
    shape_mismatch("add_channel_bias", input, bias);
  }
  require_same_dtype("add_channel_bias", input, bias);
  Tensor out = Tensor::zeros(input.shape(), input.dtype());
  const std::int64_t per_channel = input.dim(1) * input.dim(2);
  dispatch(input.dtype(), [&](auto g) {
    using T = typename decltype(g)::type;
    auto pin = input.data<T>();
    auto pb = bias.data<T>();
    auto po = out.data<T>();
    for (std::int64_t i = 0; i < input.size(); ++i) {
      po[i] = pin[i] + pb[i / per_channel];
    }
  });
  flops::add(flops::elementwise(input.size()));
  check_finite(out, "add_channel_bias");
  return out;
}

Tensor reverse_rows(const Tensor& a) {
  if (a.rank() != 2) throw ShapeError("reverse_rows: need rank 2, got " + a.shape_str());
  const std::int64_t m = a.dim(0), n = a.dim(1);
  Tensor out = Tensor::zeros(a.shape(), a.dtype());
  dispatch(a.dtype(), [&](auto g) {
    using T = typename decltype(g)::type;
    auto pa = a.data<T>();
    auto po = out.data<T>();
    for (std::int64_t i = 0; i < m; ++i) {
      std::memcpy(po.data() + (m - 1 - i) * n, pa.data() + i * n,
                  static_cast<std::size_t>(n) * sizeof(T));
    }
  });
  return out;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(0) != b.dim(0)) {
    shape_mismatch("concat_cols", a, b);
  }
  require_same_dtype("concat_cols", a, b);
  const std::int64_t m = a.dim(0), na = a.dim(1), nb = b.dim(1);
  Tensor out = Tensor::zeros({m, na + nb}, a.dtype());
  dispatch(a.dtype(), [&](auto g) {
    using T = typename decltype(g)::type;
    auto pa = a.data<T>();
    auto pb = b.data<T>();
    auto po = out.data<T>();
    for (std::int64_t i = 0; i < m; ++i) {
      std::memcpy(po.data() + i * (na + nb), pa.data() + i * na,
                  static_cast<std::size_t>(na) * sizeof(T));
      std::memcpy(po.data() + i * (na + nb) + na, pb.data() + i * nb,
                  static_cast<std::size_t>(nb) * sizeof(T));
    }
  });
  return out;
}

Tensor slice_cols(const Tensor& a, std::int64_t begin, std::int64_t end) {
  if (a.rank() != 2 || begin < 0 || end > a.dim(1) || begin >= end) {
    throw ShapeError("slice_cols: bad range [" + std::to_string(begin) + "," +
                     std::to_string(end) + ") for " + a.shape_str());
  }
  const std::int64_t m = a.dim(0), n = a.dim(1), w = end - begin;
  Tensor out = Tensor::zeros({m, w}, a.dtype());
  dispatch(a.dtype(), [&](auto g) {
    using T = typename decltype(g)::type;
    auto pa = a.data<T>();
    auto po = out.data<T>();
    for (std::int64_t i = 0; i < m; ++i) {
      std::memcpy(po.data() + i * w, pa.data() + i * n + begin,
                  static_cast<std::size_t>(w) * sizeof(T));
    }
  });
  return out;
}

double sum(const Tensor& a) {
  double acc = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) acc += a.get(i);
  return acc;
}

}  // namespace srupp
