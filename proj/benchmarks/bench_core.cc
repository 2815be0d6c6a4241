// Copyright 2026 The srupp authors. Apache 2.0 License.
//
// Microbenchmarks for the tensor kernels, the recurrence (batched kernel vs
// the naive oracle), the SRU++ layer, and the assembled encoder.

#include <benchmark/benchmark.h>

#include "srupp/encoder.hpp"
#include "srupp/srupp.hpp"

using namespace srupp;

namespace {

Tensor rand_tensor(std::vector<std::int64_t> shape, SeededRng& rng) {
  return Tensor::uniform(std::move(shape), rng, -1.0, 1.0);
}

RecurrenceParams bench_rec(std::int64_t hidden, SeededRng& rng) {
  RecurrenceParams rec = RecurrenceParams::init(hidden, hidden, rng);
  rec.v = rand_tensor({hidden}, rng);
  rec.v_r = rand_tensor({hidden}, rng);
  rec.b = rand_tensor({hidden}, rng);
  rec.b_r = rand_tensor({hidden}, rng);
  return rec;
}

void BM_Matmul(benchmark::State& state) {
  const std::int64_t n = state.range(0);
  SeededRng rng(1);
  Tensor a = rand_tensor({n, n}, rng);
  Tensor b = rand_tensor({n, n}, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(matmul(a, b));
  }
  state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

void BM_SruRecurrenceBatched(benchmark::State& state) {
  const std::int64_t steps = state.range(0), hidden = state.range(1);
  SeededRng rng(2);
  RecurrenceParams rec = bench_rec(hidden, rng);
  Tensor u = rand_tensor({steps, 3, hidden}, rng);
  Tensor x = rand_tensor({steps, hidden}, rng);
  Tensor c0 = Tensor::zeros({hidden});
  for (auto _ : state) {
    benchmark::DoNotOptimize(sru_recurrence(rec, u, x, c0));
  }
  state.SetItemsProcessed(state.iterations() * steps * hidden);
}
BENCHMARK(BM_SruRecurrenceBatched)->Args({256, 64})->Args({1024, 256});

void BM_SruRecurrenceOracle(benchmark::State& state) {
  const std::int64_t steps = state.range(0), hidden = state.range(1);
  SeededRng rng(2);
  RecurrenceParams rec = bench_rec(hidden, rng);
  Tensor u = rand_tensor({steps, 3, hidden}, rng);
  Tensor x = rand_tensor({steps, hidden}, rng);
  Tensor c0 = Tensor::zeros({hidden});
  for (auto _ : state) {
    benchmark::DoNotOptimize(sru_recurrence_oracle(rec, u, x, c0));
  }
  state.SetItemsProcessed(state.iterations() * steps * hidden);
}
BENCHMARK(BM_SruRecurrenceOracle)->Args({256, 64})->Args({1024, 256});

void BM_SruppForward(benchmark::State& state) {
  const std::int64_t steps = state.range(0), width = state.range(1);
  SeededRng rng(3);
  SruppParams p = SruppParams::init(width, width, width / 4,
                                    RnnMode::Unidirectional, true, rng);
  Tensor x = rand_tensor({steps, width}, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(srupp_forward(p, x));
  }
}
BENCHMARK(BM_SruppForward)->Args({128, 64})->Args({256, 128});

void BM_EncoderForward(benchmark::State& state) {
  EncoderConfig cfg;
  cfg.feat_dim = 40;
  cfg.embed_dim = 64;
  cfg.attn_dim = 16;
  cfg.num_layers = 2;
  Encoder enc = Encoder::init(cfg, 4);
  SeededRng rng(5);
  Tensor feats = rand_tensor({state.range(0), cfg.feat_dim}, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(encoder_forward(enc, feats));
  }
}
BENCHMARK(BM_EncoderForward)->Arg(100)->Arg(400);

}  // namespace

BENCHMARK_MAIN();
