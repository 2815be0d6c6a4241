// Copyright 2026 The srupp authors. Apache 2.0 License.

#include "doctest.h"
#include "helpers.hpp"
#include "srupp/gradcheck.hpp"
#include "srupp/task.hpp"
#include "srupp/train.hpp"

#include <cmath>
#include <cstring>
#include <string>

using namespace srupp;

namespace {

RunConfig smoke_config() {
  RunConfig cfg;
  cfg.encoder.feat_dim = 8;
  cfg.encoder.embed_dim = 8;
  cfg.encoder.attn_dim = 4;
  cfg.encoder.num_layers = 1;
  cfg.encoder.subsample_channels = 2;
  cfg.task.vocab_size = 8;
  cfg.task.train_len = 12;
  cfg.task.eval_len = 36;
  cfg.task.samples = 16;
  cfg.train.steps = 5;
  cfg.train.batch_size = 4;
  cfg.train.lr = 1e-3;
  return cfg;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("task generation is deterministic") {
  TaskSpec spec;
  spec.kind = TaskKind::Copy;
  spec.vocab_size = 4;
  spec.train_len = 5;
  spec.samples = 3;
  spec.seed = 7;
  Dataset a = make_task(spec);
  Dataset b = make_task(spec);
  REQUIRE(a.samples.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(bitwise_equal(a.samples[i].feats, b.samples[i].feats));
    CHECK(a.samples[i].labels == b.samples[i].labels);
  }
  CHECK(a.num_classes == 4);

  spec.seed = 8;
  Dataset c = make_task(spec);
  CHECK_FALSE(bitwise_equal(a.samples[0].feats, c.samples[0].feats));
}

TEST_CASE("copy task frames are one-hot and labels match") {
  TaskSpec spec;
  spec.vocab_size = 5;
  spec.train_len = 9;
  spec.samples = 4;
  Dataset ds = make_task(spec);
  for (const auto& sample : ds.samples) {
    for (std::int64_t t = 0; t < 9; ++t) {
      double row_sum = 0.0;
      std::int64_t hot = -1;
      for (std::int64_t k = 0; k < 5; ++k) {
        const double v = sample.feats.at({t, k});
        row_sum += v;
        if (v == 1.0) hot = k;
      }
      CHECK(row_sum == 1.0);
      CHECK(hot == sample.labels[static_cast<std::size_t>(t)]);
    }
  }
}

TEST_CASE("delayed echo pads the first frames and lags by three") {
  TaskSpec spec;
  spec.kind = TaskKind::DelayedEcho;
  spec.vocab_size = 6;
  spec.train_len = 10;
  spec.samples = 2;
  Dataset ds = make_task(spec);
  CHECK(ds.num_classes == 7);
  for (const auto& sample : ds.samples) {
    for (std::int64_t t = 0; t < 3; ++t) {
      CHECK(sample.labels[static_cast<std::size_t>(t)] == 6);
    }
    for (std::int64_t t = 3; t < 10; ++t) {
      std::int64_t sym = -1;
      for (std::int64_t k = 0; k < 6; ++k) {
        if (sample.feats.at({t - 3, k}) == 1.0) sym = k;
      }
      CHECK(sample.labels[static_cast<std::size_t>(t)] == sym);
    }
  }
}

TEST_CASE("label distribution is approximately uniform") {
  TaskSpec spec;
  spec.vocab_size = 4;
  spec.train_len = 100;
  spec.samples = 100;  // 10^4 symbols
  spec.seed = 11;
  Dataset ds = make_task(spec);
  std::vector<std::int64_t> counts(4, 0);
  for (const auto& sample : ds.samples) {
    for (auto label : sample.labels) ++counts[static_cast<std::size_t>(label)];
  }
  const double expected = 1e4 / 4.0;
  double chi2 = 0.0;
  for (auto c : counts) {
    const double d = static_cast<double>(c) - expected;
    chi2 += d * d / expected;
  }
  CHECK(chi2 < 30.0);  // df = 3; anything structural would be far larger
}

TEST_CASE("gradcheck report shapes") {
  GradcheckReport rep = gradcheck(GradTarget::Srupp, 1);
  CHECK(rep.max_rel_err <= 1e-4);
  CHECK_FALSE(rep.worst_param.empty());

  GradcheckReport zero = gradcheck(GradTarget::Sru, 2, {.zero_params = true});
  CHECK(zero.max_rel_err <= 1e-6);
}

TEST_CASE("the mutation harness catches a corrupted backward pass") {
  GradcheckReport rep =
      gradcheck(GradTarget::Encoder, 0, {.flip_alpha_grad = true});
  CHECK(rep.max_rel_err > 0.5);
  CHECK(rep.worst_param.find("alpha") != std::string::npos);
}

TEST_CASE("training is bitwise reproducible under a fixed seed") {
  RunConfig cfg = smoke_config();
  TrainResult a = train(cfg);
  TrainResult b = train(cfg);
  REQUIRE(a.history.loss.size() == b.history.loss.size());
  CHECK(std::memcmp(a.history.loss.data(), b.history.loss.data(),
                    a.history.loss.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(a.history.accuracy.data(), b.history.accuracy.data(),
                    a.history.accuracy.size() * sizeof(double)) == 0);
  auto pa = a.model.named_params();
  auto pb = b.model.named_params();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(bitwise_equal(*pa[i].second, *pb[i].second));
  }
}

TEST_CASE("zero learning rate freezes the loss") {
  RunConfig cfg = smoke_config();
  // Batches cycle through the dataset, so with the dataset exactly one
  // batch wide every step sees the same data; a frozen model then means a
  // frozen loss.
  cfg.task.samples = cfg.train.batch_size;
  cfg.train.lr = 0.0;
  cfg.train.steps = 6;
  TrainResult res = train(cfg);
  for (double loss : res.history.loss) {
    CHECK(std::abs(loss - res.history.loss.front()) <= 1e-12);
  }
}

TEST_CASE("divergence aborts with the failing step named") {
  RunConfig cfg = smoke_config();
  // The gated recurrence is a convex combination and will not overflow on
  // its own; a catastrophic learning rate overflows the attention matmuls
  // on the following step.
  cfg.train.lr = 1e100;
  cfg.train.steps = 10;
  try {
    train(cfg);
    FAIL("expected TrainError");
  } catch (const TrainError& e) {
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }
}

TEST_CASE("the delayed-echo task trains end to end") {
  RunConfig cfg = smoke_config();
  cfg.task.kind = TaskKind::DelayedEcho;
  cfg.task.train_len = 16;
  cfg.task.eval_len = 48;
  TrainResult res = train(cfg);
  // The head carries the padding class even though aligned output frames
  // never sample it.
  CHECK(res.model.num_classes == 9);
  CHECK(std::isfinite(res.history.loss.back()));
  std::vector<LengthAccuracy> rows =
      eval_length_generalization(res.model, cfg.task, {16, 48});
  for (const auto& row : rows) {
    CHECK(row.accuracy >= 0.0);
    CHECK(row.accuracy <= 1.0);
  }
}

TEST_CASE("untrained models score at chance level") {
  RunConfig cfg = smoke_config();
  cfg.task.train_len = 40;
  cfg.task.eval_len = 120;
  Model model = Model::init(cfg);
  std::vector<LengthAccuracy> rows =
      eval_length_generalization(model, cfg.task, {40, 120});
  for (const auto& row : rows) {
    CHECK(row.frames >= 2000);
    CHECK(std::abs(row.accuracy - 1.0 / 8.0) <= 0.03);
  }
}

TEST_CASE("evaluation rejects lengths below the minimum") {
  RunConfig cfg = smoke_config();
  Model model = Model::init(cfg);
  CHECK_THROWS_AS(eval_length_generalization(model, cfg.task, {3}),
                  ConfigError);
}

TEST_CASE("model checkpoints round-trip through disk") {
  RunConfig cfg = smoke_config();
  Model model = Model::init(cfg);
  const std::string path = "model_roundtrip.srpp";
  model.save(path);
  Model loaded = Model::load(cfg, path);
  auto pa = model.named_params();
  auto pb = loaded.named_params();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(bitwise_equal(*pa[i].second, *pb[i].second));
  }
  std::remove(path.c_str());
}

TEST_CASE("feat_dim must match the vocabulary") {
  RunConfig cfg = smoke_config();
  cfg.encoder.feat_dim = 9;
  CHECK_THROWS_AS(Model::init(cfg), ConfigError);
}

TEST_CASE("loading a checkpoint under the wrong architecture fails") {
  RunConfig cfg = smoke_config();
  Model model = Model::init(cfg);
  const std::string path = "model_mismatch.srpp";
  model.save(path);

  RunConfig deeper = cfg;
  deeper.encoder.num_layers = 2;
  CHECK_THROWS_AS(Model::load(deeper, path), IoError);

  RunConfig wider = cfg;
  wider.encoder.embed_dim = 16;
  CHECK_THROWS_AS(Model::load(wider, path), IoError);
  std::remove(path.c_str());
}

}  // TEST_SUITE
