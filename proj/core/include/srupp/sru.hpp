// Copyright 2026 The srupp authors. Apache 2.0 License.
//
// SRU layer: fused input projection, elementwise recurrence (batched kernel
// plus a deliberately naive oracle), unidirectional and bidirectional
// forward passes, and the hand-derived tape-based backward pass.
//
// Per time step, with U the projected pre-activations:
//   f[t] = sigmoid(U[t,0] + v  . c[t-1] + b)
//   r[t] = sigmoid(U[t,1] + v' . c[t-1] + b')
//   c[t] = f[t] . c[t-1] + (1 - f[t]) . U[t,2]
//   h[t] = r[t] . c[t]   + (1 - r[t]) . x[t]
// where "." is elementwise multiplication.  Every hidden dimension evolves
// independently; the only sequential dependence is through c[t].

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "srupp/rng.hpp"
#include "srupp/tensor.hpp"

namespace srupp {

enum class RnnMode { Unidirectional, Bidirectional };

// The elementwise part of the layer: everything except the input projection.
struct RecurrenceParams {
  Tensor v, v_r;  // gate state-coupling vectors, length hidden
  Tensor b, b_r;  // gate biases, length hidden
  // Highway projection (hidden x input), present iff input width differs
  // from hidden width; the output mix then reads (1-r) . (w_high x[t]).
  std::optional<Tensor> w_high;

  std::int64_t hidden() const { return v.dim(0); }

  static RecurrenceParams init(std::int64_t input, std::int64_t hidden,
                               SeededRng& rng, Dtype dt = Dtype::F64);
};

struct SruParams {
  // Stacked weight block of shape (3*hidden) x input; row blocks are the
  // forget-gate, reset-gate, and candidate projections in that order.
  Tensor w_stack;
  RecurrenceParams rec;

  std::int64_t input() const { return w_stack.dim(1); }
  std::int64_t hidden() const { return rec.hidden(); }

  static SruParams init(std::int64_t input, std::int64_t hidden,
                        SeededRng& rng, Dtype dt = Dtype::F64);
};

// Per-direction intermediates recorded by the recurrence, sufficient for the
// exact backward pass.  The parameter snapshot keeps tapes self-contained.
struct SruTape {
  RecurrenceParams rec;
  Tensor x;       // L x input, in this direction's time order
  Tensor x_high;  // L x hidden highway input (= x, or x * w_high^T)
  Tensor u;       // L x 3 x hidden
  Tensor f, r, c; // L x hidden each
  Tensor c0;      // hidden

  std::int64_t steps() const { return f.dim(0); }
};

struct RecurrenceGrads {
  Tensor u;  // L x 3 x hidden
  Tensor x;  // L x input
  Tensor v, v_r, b, b_r;
  std::optional<Tensor> w_high;
  Tensor c0;
};

struct RecurrenceParamGrads {
  Tensor v, v_r, b, b_r;
  std::optional<Tensor> w_high;
};

struct SruParamGrads {
  Tensor w_stack;
  RecurrenceParamGrads rec;
};

// Fused projection: (3*hidden x input) weight block against x^T, returned as
// an L x 3 x hidden tensor whose gate slices [t,0], [t,1], [t,2] are the
// forget, reset, and candidate pre-activations.
Tensor sru_project_u(const SruParams& p, const Tensor& x);

// Batched recurrence: parallel across hidden dimensions, sequential only in
// time.  x supplies the highway input (projected through w_high when the
// widths differ).  Fails with NumericError naming step and dimension if a
// non-finite intermediate appears.
std::pair<Tensor, SruTape> sru_recurrence(const RecurrenceParams& p,
                                          const Tensor& u, const Tensor& x,
                                          const Tensor& c0);

// Scalar per-timestep, per-dimension transcription of the same equations.
// Deliberately unoptimized and kept free of the tensor kernels; this is the
// ground truth for equivalence tests.
Tensor sru_recurrence_oracle(const RecurrenceParams& p, const Tensor& u,
                             const Tensor& x, const Tensor& c0);

// Reverse-time traversal producing exact gradients for the recurrence
// inputs and parameters given the upstream gradient of h.
RecurrenceGrads sru_recurrence_backward(const SruTape& tape,
                                        const Tensor& grad_h);

// A full layer: one parameter set per direction, fully independent.
struct SruLayer {
  RnnMode mode = RnnMode::Unidirectional;
  SruParams fwd;
  std::optional<SruParams> bwd;

  std::int64_t input() const { return fwd.input(); }
  std::int64_t hidden_total() const;

  // Bidirectional layers split hidden_total evenly across directions;
  // an odd total raises ConfigError.
  static SruLayer init(std::int64_t input, std::int64_t hidden_total,
                       RnnMode mode, SeededRng& rng, Dtype dt = Dtype::F64);

  // Checkpoint view, names "<prefix>.<dir>.<field>".
  void named_tensors(const std::string& prefix,
                     std::vector<std::pair<std::string, Tensor*>>& out);
};

struct SruLayerTape {
  RnnMode mode = RnnMode::Unidirectional;
  Tensor w_stack_fwd;
  std::optional<Tensor> w_stack_bwd;
  SruTape fwd;
  std::optional<SruTape> bwd;
};

struct SruLayerGrads {
  SruParamGrads fwd;
  std::optional<SruParamGrads> bwd;
  Tensor x;  // gradient with respect to the layer input
};

// Unidirectional: project then recur in time order.  Bidirectional: the
// forward direction consumes x as is; the backward direction consumes the
// time-reversed x and its output is reversed back; h is the feature-axis
// concatenation [forward | backward].  c0 pointers default to zeros.
std::pair<Tensor, SruLayerTape> sru_forward(const SruLayer& layer,
                                            const Tensor& x,
                                            const Tensor* c0_fwd = nullptr,
                                            const Tensor* c0_bwd = nullptr);

SruLayerGrads sru_backward(const SruLayerTape& tape, const Tensor& grad_h);

}  // namespace srupp
