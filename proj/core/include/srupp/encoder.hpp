// Copyright 2026 The srupp authors. Apache 2.0 License.
//
// Encoder assembly: two stride-2 3x3 convolution stages with rectifier
// activations subsample the input features about 4x in time, a linear layer
// projects the flattened conv output to the recurrence width d, a stack of
// SRU++ layers follows, and an optional linear layer maps to the output
// width.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "srupp/srupp.hpp"
#include "srupp/tensor.hpp"

namespace srupp {

struct EncoderConfig {
  std::int64_t feat_dim = 8;
  std::int64_t embed_dim = 64;  // recurrence hidden size d
  std::int64_t attn_dim = 16;   // attention dimension d'
  std::int64_t num_layers = 2;
  std::int64_t output_dim = 0;  // 0 disables the output linear
  bool bidirectional = false;
  std::int64_t subsample_channels = 32;
  bool normalization = true;
  Dtype dtype = Dtype::F64;

  void validate() const;  // throws ConfigError

  std::int64_t encoder_width() const {
    return output_dim > 0 ? output_dim : embed_dim;
  }

  // One valid stride-2 3x3 stage: floor((e-1)/2), clamped at 0.
  static std::int64_t subsampled_extent(std::int64_t e);
  // Both stages.
  static std::int64_t output_len(std::int64_t t);

  // Two stride-2 valid 3x3 convolutions need at least this much extent.
  static constexpr std::int64_t kMinInputLen = 7;

  bool operator==(const EncoderConfig&) const = default;
};

struct Encoder {
  EncoderConfig cfg;
  Tensor conv1_w, conv1_b;  // C x 1 x 3 x 3, C
  Tensor conv2_w, conv2_b;  // C x C x 3 x 3, C
  Tensor in_w, in_b;        // d x (C * F''), d
  std::vector<SruppParams> layers;
  std::optional<Tensor> out_w, out_b;  // output_dim x d, output_dim

  static Encoder init(const EncoderConfig& cfg, SeededRng& rng);
  static Encoder init(const EncoderConfig& cfg, std::uint64_t seed);

  // Stable, ordered checkpoint view of every trainable tensor.
  std::vector<std::pair<std::string, Tensor*>> named_params();
  std::vector<std::pair<std::string, const Tensor*>> named_params() const;
};

struct EncoderTape {
  Tensor feats;                  // T x feat_dim
  Tensor conv1_pre, conv2_pre;   // pre-activation conv outputs
  Tensor conv1_act;              // post-ReLU stage-1 output
  Tensor frames;                 // T'' x (C * F'') flattened conv features
  Tensor proj;                   // T'' x d input-linear output
  std::vector<SruppTape> layers;
  Tensor pre_out;                // input to the output linear (when present)
};

// Gradients keyed by the same names as Encoder::named_params, plus the
// gradient with respect to the input features under "feats".
using EncoderGrads = std::map<std::string, Tensor>;

// feats is T x feat_dim with T >= kMinInputLen (shorter input raises
// ShapeError naming the minimum).  The output is T'' x width with
// T'' = output_len(T).
std::pair<Tensor, EncoderTape> encoder_forward(const Encoder& enc,
                                               const Tensor& feats);

EncoderGrads encoder_backward(const Encoder& enc, const EncoderTape& tape,
                              const Tensor& grad_out);

}  // namespace srupp
