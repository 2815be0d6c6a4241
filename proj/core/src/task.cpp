// Copyright 2026 The srupp authors. Apache 2.0 License.

#include "srupp/task.hpp"

#include "srupp/rng.hpp"

namespace srupp {

namespace {

Dataset generate(const TaskSpec& spec, std::int64_t length,
                 std::int64_t sample_count, std::uint64_t seed, Dtype dt) {
  Dataset ds;
  ds.vocab = spec.vocab_size;
  ds.num_classes =
      spec.kind == TaskKind::DelayedEcho ? spec.vocab_size + 1 : spec.vocab_size;
  SeededRng rng(seed);
  ds.samples.reserve(static_cast<std::size_t>(sample_count));
  for (std::int64_t s = 0; s < sample_count; ++s) {
    TaskSample sample;
    std::vector<std::int64_t> symbols(static_cast<std::size_t>(length));
    for (auto& sym : symbols) {
      sym = static_cast<std::int64_t>(
          rng.below(static_cast<std::uint64_t>(spec.vocab_size)));
    }
    sample.feats = Tensor::zeros({length, spec.vocab_size}, dt);
    sample.labels.resize(static_cast<std::size_t>(length));
    for (std::int64_t t = 0; t < length; ++t) {
      sample.feats.set(t * spec.vocab_size + symbols[static_cast<std::size_t>(t)],
                       1.0);
      if (spec.kind == TaskKind::Copy) {
        sample.labels[static_cast<std::size_t>(t)] =
            symbols[static_cast<std::size_t>(t)];
      } else {
        sample.labels[static_cast<std::size_t>(t)] =
            t < kEchoLag ? spec.vocab_size
                         : symbols[static_cast<std::size_t>(t - kEchoLag)];
      }
    }
    ds.samples.push_back(std::move(sample));
  }
  return ds;
}

}  // namespace

Dataset make_task(const TaskSpec& spec, Dtype dt) {
  spec.validate();
  return generate(spec, spec.train_len, spec.samples, spec.seed, dt);
}

Dataset make_task_at_length(const TaskSpec& spec, std::int64_t length,
                            std::int64_t samples, Dtype dt) {
  spec.validate();
  // Evaluation stream: distinct from the training stream for every length.
  const std::uint64_t seed =
      spec.seed * 0x100000001b3ull + static_cast<std::uint64_t>(length) + 1;
  return generate(spec, length, samples, seed, dt);
}

}  // namespace srupp
