// Copyright 2026 The srupp authors. Apache 2.0 License.
//
// Shared test utilities and the independent oracles the suites check
// against.  Oracles are deliberately written as plain scalar loops, never in
// terms of the library kernels they verify.

#pragma once

#include <cmath>
#include <vector>

#include "srupp/rng.hpp"
#include "srupp/tensor.hpp"

namespace testutil {

using srupp::SeededRng;
using srupp::Tensor;

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.shape() == b.shape());
  double worst = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a.get(i) - b.get(i)));
  }
  return worst;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(1e-8, std::abs(a) + std::abs(b));
}

inline Tensor rand_tensor(std::vector<std::int64_t> shape, SeededRng& rng,
                          double lo = -1.0, double hi = 1.0) {
  return Tensor::uniform(std::move(shape), rng, lo, hi);
}

// ---------------------------------------------------------------------------
// Oracles.
// ---------------------------------------------------------------------------

// Triple-loop matrix product reference.
inline Tensor matmul_oracle(const Tensor& a, const Tensor& b) {
  const std::int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out = Tensor::zeros({m, n}, a.dtype());
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::int64_t p = 0; p < k; ++p) {
        acc += a.get(i * k + p) * b.get(p * n + j);
      }
      out.set(i * n + j, acc);
    }
  }
  return out;
}

// Direct exp/sum row softmax reference.
inline Tensor softmax_oracle(const Tensor& a) {
  const std::int64_t m = a.dim(0), n = a.dim(1);
  Tensor out = Tensor::zeros({m, n}, a.dtype());
  for (std::int64_t i = 0; i < m; ++i) {
    double total = 0.0;
    for (std::int64_t j = 0; j < n; ++j) total += std::exp(a.get(i * n + j));
    for (std::int64_t j = 0; j < n; ++j) {
      out.set(i * n + j, std::exp(a.get(i * n + j)) / total);
    }
  }
  return out;
}

// Six-nested-loop valid cross-correlation reference.
inline Tensor conv2d_oracle(const Tensor& input, const Tensor& kernels,
                            int stride) {
  const std::int64_t c_in = input.dim(0), t_in = input.dim(1),
                     f_in = input.dim(2);
  const std::int64_t c_out = kernels.dim(0);
  const std::int64_t t_out = (t_in - 3) / stride + 1;
  const std::int64_t f_out = (f_in - 3) / stride + 1;
  Tensor out = Tensor::zeros({c_out, t_out, f_out}, input.dtype());
  for (std::int64_t co = 0; co < c_out; ++co) {
    for (std::int64_t to = 0; to < t_out; ++to) {
      for (std::int64_t fo = 0; fo < f_out; ++fo) {
        double acc = 0.0;
        for (std::int64_t ci = 0; ci < c_in; ++ci) {
          for (std::int64_t ki = 0; ki < 3; ++ki) {
            for (std::int64_t kj = 0; kj < 3; ++kj) {
              acc += input.at({ci, to * stride + ki, fo * stride + kj}) *
                     kernels.at({co, ci, ki, kj});
            }
          }
        }
        out.set((co * t_out + to) * f_out + fo, acc);
      }
    }
  }
  return out;
}

// Scalar single-head attention reference: weights and context via explicit
// loops over positions.
struct AttentionOracle {
  Tensor a;        // d' x L
  Tensor weights;  // L x L
};

inline AttentionOracle attention_oracle(const Tensor& q, const Tensor& k,
                                        const Tensor& v) {
  const std::int64_t dp = q.dim(0), len = q.dim(1);
  AttentionOracle res;
  res.weights = Tensor::zeros({len, len}, q.dtype());
  res.a = Tensor::zeros({dp, len}, q.dtype());
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dp));
  for (std::int64_t i = 0; i < len; ++i) {
    std::vector<double> logits(static_cast<std::size_t>(len));
    double mx = -1e300;
    for (std::int64_t j = 0; j < len; ++j) {
      double dot = 0.0;
      for (std::int64_t c = 0; c < dp; ++c) {
        dot += q.get(c * len + i) * k.get(c * len + j);
      }
      logits[static_cast<std::size_t>(j)] = dot * inv_sqrt;
      mx = std::max(mx, logits[static_cast<std::size_t>(j)]);
    }
    double total = 0.0;
    for (std::int64_t j = 0; j < len; ++j) {
      total += std::exp(logits[static_cast<std::size_t>(j)] - mx);
    }
    for (std::int64_t j = 0; j < len; ++j) {
      res.weights.set(i * len + j,
                      std::exp(logits[static_cast<std::size_t>(j)] - mx) /
                          total);
    }
  }
  for (std::int64_t c = 0; c < dp; ++c) {
    for (std::int64_t i = 0; i < len; ++i) {
      double acc = 0.0;
      for (std::int64_t j = 0; j < len; ++j) {
        acc += res.weights.get(i * len + j) * v.get(c * len + j);
      }
      res.a.set(c * len + i, acc);
    }
  }
  return res;
}

}  // namespace testutil
