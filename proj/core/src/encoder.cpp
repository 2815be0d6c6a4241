// Copyright 2026 The srupp authors. Apache 2.0 License.

#include "srupp/encoder.hpp"

#include <cmath>
#include <string>

namespace srupp {

namespace {

Tensor init_fanin(std::vector<std::int64_t> shape, std::int64_t fan_in,
                  SeededRng& rng, Dtype dt) {
  const double bound = std::sqrt(3.0 / static_cast<double>(fan_in));
  return Tensor::uniform(std::move(shape), rng, -bound, bound, dt);
}

// C x T x F -> T x (C*F), channel-major per frame.
Tensor flatten_frames(const Tensor& x) {
  const std::int64_t c = x.dim(0), t = x.dim(1), f = x.dim(2);
  Tensor out = Tensor::zeros({t, c * f}, x.dtype());
  for (std::int64_t ci = 0; ci < c; ++ci) {
    for (std::int64_t ti = 0; ti < t; ++ti) {
      for (std::int64_t fi = 0; fi < f; ++fi) {
        out.set(ti * c * f + ci * f + fi, x.get((ci * t + ti) * f + fi));
      }
    }
  }
  return out;
}

Tensor unflatten_frames(const Tensor& g, std::int64_t c, std::int64_t t,
                        std::int64_t f) {
  Tensor out = Tensor::zeros({c, t, f}, g.dtype());
  for (std::int64_t ci = 0; ci < c; ++ci) {
    for (std::int64_t ti = 0; ti < t; ++ti) {
      for (std::int64_t fi = 0; fi < f; ++fi) {
        out.set((ci * t + ti) * f + fi, g.get(ti * c * f + ci * f + fi));
      }
    }
  }
  return out;
}

// Zero the gradient wherever the pre-activation was not positive.
Tensor relu_backward(const Tensor& pre, const Tensor& grad) {
  Tensor out = Tensor::zeros(grad.shape(), grad.dtype());
  for (std::int64_t i = 0; i < grad.size(); ++i) {
    out.set(i, pre.get(i) > 0.0 ? grad.get(i) : 0.0);
  }
  return out;
}

Tensor colsum(const Tensor& a) {
  const std::int64_t m = a.dim(0), n = a.dim(1);
  Tensor out = Tensor::zeros({n}, a.dtype());
  for (std::int64_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < m; ++i) acc += a.get(i * n + j);
    out.set(j, acc);
  }
  return out;
}

struct ConvGrads {
  Tensor kernels, bias, input;
};

ConvGrads conv2d_backward(const Tensor& input, const Tensor& kernels,
                          const Tensor& grad_out, int stride) {
  const std::int64_t c_in = input.dim(0), t_in = input.dim(1),
                     f_in = input.dim(2);
  const std::int64_t c_out = grad_out.dim(0), t_out = grad_out.dim(1),
                     f_out = grad_out.dim(2);
  ConvGrads g;
  g.kernels = Tensor::zeros(kernels.shape(), kernels.dtype());
  g.bias = Tensor::zeros({c_out}, kernels.dtype());
  g.input = Tensor::zeros(input.shape(), input.dtype());
  for (std::int64_t co = 0; co < c_out; ++co) {
    double bias_acc = 0.0;
    for (std::int64_t to = 0; to < t_out; ++to) {
      for (std::int64_t fo = 0; fo < f_out; ++fo) {
        const double go = grad_out.get((co * t_out + to) * f_out + fo);
        bias_acc += go;
        for (std::int64_t ci = 0; ci < c_in; ++ci) {
          for (std::int64_t ki = 0; ki < 3; ++ki) {
            for (std::int64_t kj = 0; kj < 3; ++kj) {
              const std::int64_t in_idx =
                  (ci * t_in + to * stride + ki) * f_in + fo * stride + kj;
              const std::int64_t k_idx = ((co * c_in + ci) * 3 + ki) * 3 + kj;
              g.kernels.set(k_idx,
                            g.kernels.get(k_idx) + go * input.get(in_idx));
              g.input.set(in_idx,
                          g.input.get(in_idx) + go * kernels.get(k_idx));
            }
          }
        }
      }
    }
    g.bias.set(co, bias_acc);
  }
  return g;
}

void append_srupp_grads(const std::string& prefix, SruppGrads&& sg,
                        const SruppParams& p, EncoderGrads* out) {
  (*out)[prefix + ".wq"] = std::move(sg.wq);
  (*out)[prefix + ".wk"] = std::move(sg.wk);
  (*out)[prefix + ".wv"] = std::move(sg.wv);
  (*out)[prefix + ".wo"] = std::move(sg.wo);
  (*out)[prefix + ".alpha"] = std::move(sg.alpha);
  if (p.norm) {
    (*out)[prefix + ".norm.gain"] = std::move(*sg.norm_gain);
    (*out)[prefix + ".norm.bias"] = std::move(*sg.norm_bias);
  }
  auto dir = [out](const std::string& base, RecurrenceParamGrads&& r) {
    (*out)[base + ".v"] = std::move(r.v);
    (*out)[base + ".v_r"] = std::move(r.v_r);
    (*out)[base + ".b"] = std::move(r.b);
    (*out)[base + ".b_r"] = std::move(r.b_r);
    if (r.w_high.has_value()) (*out)[base + ".w_high"] = std::move(*r.w_high);
  };
  dir(prefix + ".fwd", std::move(sg.fwd));
  if (sg.bwd.has_value()) dir(prefix + ".bwd", std::move(*sg.bwd));
}

}  // namespace

void EncoderConfig::validate() const {
  if (feat_dim < 1) throw ConfigError("feat_dim must be >= 1");
  if (embed_dim < 1) throw ConfigError("embed_dim must be >= 1");
  if (attn_dim < 1) throw ConfigError("attn_dim must be >= 1");
  if (num_layers < 1) throw ConfigError("num_layers must be >= 1");
  if (output_dim < 0) throw ConfigError("output_dim must be >= 0");
  if (subsample_channels < 1) {
    throw ConfigError("subsample_channels must be >= 1");
  }
  if (bidirectional && embed_dim % 2 != 0) {
    throw ConfigError("bidirectional encoders need an even embed_dim, got " +
                      std::to_string(embed_dim));
  }
}

std::int64_t EncoderConfig::subsampled_extent(std::int64_t e) {
  return e >= 1 ? (e - 1) / 2 : 0;
}

std::int64_t EncoderConfig::output_len(std::int64_t t) {
  return subsampled_extent(subsampled_extent(t));
}

Encoder Encoder::init(const EncoderConfig& cfg, SeededRng& rng) {
  cfg.validate();
  const std::int64_t feat_sub =
      EncoderConfig::subsampled_extent(
          EncoderConfig::subsampled_extent(cfg.feat_dim));
  if (feat_sub < 1) {
    throw ConfigError("feat_dim " + std::to_string(cfg.feat_dim) +
                      " is too small to pass two 3x3 stride-2 convolutions "
                      "(need >= 7)");
  }
  const std::int64_t c = cfg.subsample_channels;
  const Dtype dt = cfg.dtype;
  Encoder enc;
  enc.cfg = cfg;
  enc.conv1_w = init_fanin({c, 1, 3, 3}, 9, rng, dt);
  enc.conv1_b = Tensor::zeros({c}, dt);
  enc.conv2_w = init_fanin({c, c, 3, 3}, 9 * c, rng, dt);
  enc.conv2_b = Tensor::zeros({c}, dt);
  enc.in_w = init_fanin({cfg.embed_dim, c * feat_sub}, c * feat_sub, rng, dt);
  enc.in_b = Tensor::zeros({cfg.embed_dim}, dt);
  const RnnMode mode =
      cfg.bidirectional ? RnnMode::Bidirectional : RnnMode::Unidirectional;
  enc.layers.reserve(static_cast<std::size_t>(cfg.num_layers));
  for (std::int64_t i = 0; i < cfg.num_layers; ++i) {
    enc.layers.push_back(SruppParams::init(cfg.embed_dim, cfg.embed_dim,
                                           cfg.attn_dim, mode,
                                           cfg.normalization, rng, dt));
  }
  if (cfg.output_dim > 0) {
    enc.out_w = init_fanin({cfg.output_dim, cfg.embed_dim}, cfg.embed_dim,
                           rng, dt);
    enc.out_b = Tensor::zeros({cfg.output_dim}, dt);
  }
  return enc;
}

Encoder Encoder::init(const EncoderConfig& cfg, std::uint64_t seed) {
  SeededRng rng(seed);
  return init(cfg, rng);
}

std::vector<std::pair<std::string, Tensor*>> Encoder::named_params() {
  std::vector<std::pair<std::string, Tensor*>> out;
  out.emplace_back("conv1.weight", &conv1_w);
  out.emplace_back("conv1.bias", &conv1_b);
  out.emplace_back("conv2.weight", &conv2_w);
  out.emplace_back("conv2.bias", &conv2_b);
  out.emplace_back("input_proj.weight", &in_w);
  out.emplace_back("input_proj.bias", &in_b);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].named_tensors("srupp." + std::to_string(i), out);
  }
  if (out_w.has_value()) {
    out.emplace_back("output_proj.weight", &*out_w);
    out.emplace_back("output_proj.bias", &*out_b);
  }
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> Encoder::named_params()
    const {
  auto mut = const_cast<Encoder*>(this)->named_params();
  std::vector<std::pair<std::string, const Tensor*>> out;
  out.reserve(mut.size());
  for (auto& [name, t] : mut) out.emplace_back(name, t);
  return out;
}

std::pair<Tensor, EncoderTape> encoder_forward(const Encoder& enc,
                                               const Tensor& feats) {
  const EncoderConfig& cfg = enc.cfg;
  if (feats.rank() != 2 || feats.dim(1) != cfg.feat_dim) {
    throw ShapeError("encoder_forward: expected [T x " +
                     std::to_string(cfg.feat_dim) + "] features, got " +
                     feats.shape_str());
  }
  if (feats.dim(0) < EncoderConfig::kMinInputLen) {
    throw ShapeError("encoder_forward: sequence of length " +
                     std::to_string(feats.dim(0)) + " is too short; minimum is " +
                     std::to_string(EncoderConfig::kMinInputLen));
  }
  if (feats.dtype() != cfg.dtype) {
    throw ShapeError("encoder_forward: features must be " +
                     std::string(dtype_name(cfg.dtype)));
  }

  EncoderTape tape;
  tape.feats = feats;
  Tensor x0 = feats.reshaped({1, feats.dim(0), feats.dim(1)});
  tape.conv1_pre = add_channel_bias(conv2d(x0, enc.conv1_w), enc.conv1_b);
  tape.conv1_act = relu(tape.conv1_pre);
  tape.conv2_pre =
      add_channel_bias(conv2d(tape.conv1_act, enc.conv2_w), enc.conv2_b);
  Tensor conv2_act = relu(tape.conv2_pre);
  tape.frames = flatten_frames(conv2_act);
  tape.proj = add(matmul(tape.frames, transpose(enc.in_w)), enc.in_b);

  Tensor h = tape.proj;
  tape.layers.reserve(enc.layers.size());
  for (const SruppParams& layer : enc.layers) {
    auto [next, ltape] = srupp_forward(layer, h);
    tape.layers.push_back(std::move(ltape));
    h = std::move(next);
  }
  tape.pre_out = h;
  if (enc.out_w.has_value()) {
    h = add(matmul(h, transpose(*enc.out_w)), *enc.out_b);
  }
  return {std::move(h), std::move(tape)};
}

EncoderGrads encoder_backward(const Encoder& enc, const EncoderTape& tape,
                              const Tensor& grad_out) {
  EncoderGrads g;
  Tensor grad = grad_out;
  if (enc.out_w.has_value()) {
    g["output_proj.weight"] = matmul(transpose(grad), tape.pre_out);
    g["output_proj.bias"] = colsum(grad);
    grad = matmul(grad, *enc.out_w);
  }
  for (std::size_t i = enc.layers.size(); i-- > 0;) {
    SruppGrads sg = srupp_backward(tape.layers[i], grad);
    grad = sg.x;
    append_srupp_grads("srupp." + std::to_string(i), std::move(sg),
                       enc.layers[i], &g);
  }
  g["input_proj.weight"] = matmul(transpose(grad), tape.frames);
  g["input_proj.bias"] = colsum(grad);
  Tensor gframes = matmul(grad, enc.in_w);

  const std::int64_t c = enc.cfg.subsample_channels;
  const std::int64_t t2 = tape.conv2_pre.dim(1), f2 = tape.conv2_pre.dim(2);
  Tensor gconv2 = relu_backward(tape.conv2_pre,
                                unflatten_frames(gframes, c, t2, f2));
  ConvGrads c2 = conv2d_backward(tape.conv1_act, enc.conv2_w, gconv2, 2);
  g["conv2.weight"] = std::move(c2.kernels);
  g["conv2.bias"] = std::move(c2.bias);

  Tensor gconv1 = relu_backward(tape.conv1_pre, c2.input);
  Tensor x0 = tape.feats.reshaped({1, tape.feats.dim(0), tape.feats.dim(1)});
  ConvGrads c1 = conv2d_backward(x0, enc.conv1_w, gconv1, 2);
  g["conv1.weight"] = std::move(c1.kernels);
  g["conv1.bias"] = std::move(c1.bias);
  g["feats"] = c1.input.reshaped({tape.feats.dim(0), tape.feats.dim(1)});
  return g;
}

}  // namespace srupp
