// Copyright 2026 The srupp authors. Apache 2.0 License.

#include "doctest.h"
#include "helpers.hpp"
#include "srupp/encoder.hpp"
#include "srupp/gradcheck.hpp"

#include <cmath>
#include <string>
#include <thread>
#include <vector>

using namespace srupp;
using testutil::max_abs_diff;
using testutil::rand_tensor;

namespace {

EncoderConfig tiny_config() {
  EncoderConfig cfg;
  cfg.feat_dim = 8;
  cfg.embed_dim = 8;
  cfg.attn_dim = 4;
  cfg.num_layers = 2;
  cfg.subsample_channels = 2;
  cfg.normalization = true;
  return cfg;
}

}  // namespace

TEST_SUITE("encoder") {

TEST_CASE("config validation") {
  EncoderConfig cfg = tiny_config();
  CHECK_NOTHROW(cfg.validate());
  cfg.bidirectional = true;
  cfg.embed_dim = 7;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.embed_dim = 8;
  CHECK_NOTHROW(cfg.validate());
  cfg.num_layers = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  // Countable but not instantiable: the conv chain leaves no feature width.
  EncoderConfig narrow = tiny_config();
  narrow.feat_dim = 4;
  CHECK_NOTHROW(narrow.validate());
  CHECK_THROWS_AS(Encoder::init(narrow, 1), ConfigError);
}

TEST_CASE("output shape follows the subsampling formula") {
  Encoder enc = Encoder::init(tiny_config(), 1);
  Tensor out = encoder_forward(enc, Tensor::zeros({16, 8})).first;
  CHECK(out.shape() == std::vector<std::int64_t>{3, 8});
  CHECK(EncoderConfig::output_len(16) == 3);

  EncoderConfig with_out = tiny_config();
  with_out.output_dim = 5;
  Encoder enc2 = Encoder::init(with_out, 1);
  CHECK(encoder_forward(enc2, Tensor::zeros({16, 8})).first.shape() ==
        std::vector<std::int64_t>{3, 5});

  // The formula holds across the whole supported range.
  SeededRng rng(2);
  for (std::int64_t t = 7; t <= 31; t += 3) {
    Tensor o = encoder_forward(enc, rand_tensor({t, 8}, rng)).first;
    CHECK(o.dim(0) == EncoderConfig::output_len(t));
  }
}

TEST_CASE("sequences below the minimum length are rejected") {
  Encoder enc = Encoder::init(tiny_config(), 1);
  try {
    encoder_forward(enc, Tensor::zeros({6, 8}));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("7") != std::string::npos);
  }
}

TEST_CASE("zeroed encoder produces a zero output of the right shape") {
  EncoderConfig cfg = tiny_config();
  cfg.output_dim = 5;
  Encoder enc = Encoder::init(cfg, 3);
  for (auto& [name, t] : enc.named_params()) {
    *t = Tensor::zeros(t->shape(), t->dtype());
  }
  SeededRng rng(4);
  Tensor out = encoder_forward(enc, rand_tensor({12, 8}, rng)).first;
  CHECK(bitwise_equal(out, Tensor::zeros({2, 5})));
}

TEST_CASE("forward is deterministic") {
  Encoder enc = Encoder::init(tiny_config(), 5);
  SeededRng rng(6);
  Tensor feats = rand_tensor({14, 8}, rng);
  CHECK(bitwise_equal(encoder_forward(enc, feats).first,
                      encoder_forward(enc, feats).first));
}

TEST_CASE("identical seeds build identical encoders") {
  Encoder a = Encoder::init(tiny_config(), 7);
  Encoder b = Encoder::init(tiny_config(), 7);
  auto na = a.named_params();
  auto nb = b.named_params();
  REQUIRE(na.size() == nb.size());
  for (std::size_t i = 0; i < na.size(); ++i) {
    CHECK(na[i].first == nb[i].first);
    CHECK(bitwise_equal(*na[i].second, *nb[i].second));
  }
}

TEST_CASE("backward of a zero gradient is zero") {
  Encoder enc = Encoder::init(tiny_config(), 8);
  SeededRng rng(9);
  auto [out, tape] = encoder_forward(enc, rand_tensor({12, 8}, rng));
  EncoderGrads g = encoder_backward(enc, tape, Tensor::zeros(out.shape()));
  for (const auto& [name, grad] : g) {
    CHECK(bitwise_equal(grad, Tensor::zeros(grad.shape())));
  }
}

TEST_CASE("gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    GradcheckReport rep = gradcheck(GradTarget::Encoder, seed);
    INFO("seed ", seed, " worst ", rep.worst_param);
    CHECK(rep.max_rel_err <= 1e-4);
  }
}

TEST_CASE("backward is additive in the upstream gradient") {
  Encoder enc = Encoder::init(tiny_config(), 10);
  SeededRng rng(11);
  auto [out, tape] = encoder_forward(enc, rand_tensor({12, 8}, rng));
  Tensor g1 = rand_tensor(out.shape(), rng);
  Tensor g2 = rand_tensor(out.shape(), rng);
  EncoderGrads a = encoder_backward(enc, tape, g1);
  EncoderGrads b = encoder_backward(enc, tape, g2);
  EncoderGrads ab = encoder_backward(enc, tape, add(g1, g2));
  for (const auto& [name, grad] : ab) {
    CHECK(max_abs_diff(grad, add(a.at(name), b.at(name))) <= 1e-12);
  }
}

TEST_CASE("concurrent forward passes match serial results") {
  Encoder enc = Encoder::init(tiny_config(), 13);
  SeededRng rng(14);
  std::vector<Tensor> inputs, serial;
  for (int i = 0; i < 4; ++i) {
    inputs.push_back(rand_tensor({12 + 2 * i, 8}, rng));
    serial.push_back(encoder_forward(enc, inputs.back()).first);
  }
  std::vector<Tensor> parallel(4);
  std::vector<std::thread> pool;
  for (int i = 0; i < 4; ++i) {
    pool.emplace_back([&, i] {
      parallel[static_cast<std::size_t>(i)] =
          encoder_forward(enc, inputs[static_cast<std::size_t>(i)]).first;
    });
  }
  for (auto& t : pool) t.join();
  for (int i = 0; i < 4; ++i) {
    CHECK(bitwise_equal(parallel[static_cast<std::size_t>(i)],
                        serial[static_cast<std::size_t>(i)]));
  }
}

TEST_CASE("named parameters cover both directions and the output linear") {
  EncoderConfig cfg = tiny_config();
  cfg.bidirectional = true;
  cfg.output_dim = 4;
  Encoder enc = Encoder::init(cfg, 12);
  bool saw_bwd_high = false, saw_out = false, saw_norm = false;
  for (auto& [name, t] : enc.named_params()) {
    if (name == "srupp.1.bwd.w_high") saw_bwd_high = true;
    if (name == "output_proj.weight") saw_out = true;
    if (name == "srupp.0.norm.gain") saw_norm = true;
  }
  CHECK(saw_bwd_high);
  CHECK(saw_out);
  CHECK(saw_norm);
}

}  // TEST_SUITE
