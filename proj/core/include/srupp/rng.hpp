// Copyright 2026 The srupp authors. Apache 2.0 License.
//
// Counter-based deterministic random number generator.

#pragma once

#include <cstdint>

namespace srupp {

// SplitMix64: the state is a counter advanced by a fixed odd constant and
// each output is the counter pushed through two xorshift-multiply rounds.
// The draw sequence depends only on the seed, never on platform, compiler,
// or standard-library version.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 mantissa bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n) via the multiply-shift map; biased by at most
  // n / 2^64, which is irrelevant for the small n used here.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

 private:
  std::uint64_t state_;
};

}  // namespace srupp
