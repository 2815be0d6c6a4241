// Copyright 2026 The srupp authors. Apache 2.0 License.
//
// SRU++ layer: the fused input projection of the SRU is replaced by a
// single-head self-attention block with a trainable residual scale.  With X
// the layer input (optionally layer-normalized before the query projection):
//
//   Q = Wq X^T          K = Wk Q          V = Wv Q
//   weights = softmax_rows(Q^T K / sqrt(d'))
//   A^T = weights V^T
//   U^T = Wo (Q + alpha * A)
//
// and U then feeds the unchanged elementwise recurrence.  There is exactly
// one head and no positional encoding; the recurrence supplies order
// information.  Attention always sees the full sequence (no causal mask).

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "srupp/sru.hpp"
#include "srupp/tensor.hpp"

namespace srupp {

struct SruppParams {
  Tensor wq;     // d' x d
  Tensor wk;     // d' x d'
  Tensor wv;     // d' x d'
  Tensor wo;     // (3*hidden_total) x d'
  Tensor alpha;  // shape {1}; residual scale, initialized to 0

  // Optional feature-axis layer normalization applied before Wq.  Disable
  // for the literal unnormalized attention equations.
  bool norm = false;
  Tensor norm_gain, norm_bias;  // length d when norm

  RnnMode mode = RnnMode::Unidirectional;
  RecurrenceParams fwd;
  std::optional<RecurrenceParams> bwd;

  std::int64_t input() const { return wq.dim(1); }
  std::int64_t attn_dim() const { return wq.dim(0); }
  std::int64_t hidden_total() const { return wo.dim(0) / 3; }

  static SruppParams init(std::int64_t input, std::int64_t hidden_total,
                          std::int64_t attn_dim, RnnMode mode, bool norm,
                          SeededRng& rng, Dtype dt = Dtype::F64);

  // Checkpoint view, names "<prefix>.<field>" and "<prefix>.<dir>.<field>".
  void named_tensors(const std::string& prefix,
                     std::vector<std::pair<std::string, Tensor*>>& out);
};

struct AttentionRecord {
  Tensor q, k, v;  // d' x L each
  Tensor weights;  // L x L, rows nonnegative and summing to 1
  Tensor a;        // d' x L
};

struct Qkv {
  Tensor q, k, v;
};

struct SruppTape {
  SruppParams params;  // snapshot
  Tensor x;            // L x d layer input
  Tensor xn;           // attention input: layer-normalized x, or x itself
  Tensor mean, rstd;   // per-row normalization stats (length L) when norm
  AttentionRecord attn;
  Tensor u;            // L x 3 x hidden_total
  SruTape fwd;
  std::optional<SruTape> bwd;
};

struct SruppGrads {
  Tensor wq, wk, wv, wo, alpha;
  std::optional<Tensor> norm_gain, norm_bias;
  RecurrenceParamGrads fwd;
  std::optional<RecurrenceParamGrads> bwd;
  Tensor x;
};

// Q/K/V construction; note K and V are derived from Q, not from x.
// x here is the attention input (already normalized when applicable).
Qkv attention_qkv(const SruppParams& p, const Tensor& x);

// Returns (A, weights) with A = d' x L and weights the L x L row-stochastic
// matrix softmax_rows(Q^T K / sqrt(d')).
std::pair<Tensor, Tensor> attention_output(const Tensor& q, const Tensor& k,
                                           const Tensor& v);

// Full projection replacing the fused SRU matmul: U^T = Wo (Q + alpha A),
// reshaped to L x 3 x hidden_total.  When alpha is exactly 0 the residual
// add is skipped, so the output is bit-identical to the attention-deleted
// projection Wo Q; A and the weights are still computed and recorded.
std::pair<Tensor, AttentionRecord> srupp_project_u(const SruppParams& p,
                                                   const Tensor& x);

std::pair<Tensor, SruppTape> srupp_forward(const SruppParams& p,
                                           const Tensor& x,
                                           const Tensor* c0_fwd = nullptr,
                                           const Tensor* c0_bwd = nullptr);

SruppGrads srupp_backward(const SruppTape& tape, const Tensor& grad_h);

// The recurrence stage alone, given an externally supplied U; the
// attention-deleted comparison path.  Layer-width semantics (direction
// split, highway input, concatenation) match srupp_forward exactly.
Tensor srupp_recurrence_from_u(const SruppParams& p, const Tensor& u,
                               const Tensor& x);

// The stored row-stochastic attention weight matrix.  With a single head
// this is also the per-layer head average.
const Tensor& attention_weights(const SruppTape& tape);

}  // namespace srupp
