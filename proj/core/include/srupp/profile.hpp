// Copyright 2026 The srupp authors. Apache 2.0 License.
//
// Analytic parameter and forward-FLOP accounting for the encoder.  The FLOP
// estimate replays encoder_forward's operation sequence symbolically using
// the formulas in flops.hpp, so it matches an instrumented execution
// exactly; tests enforce that equality.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "srupp/encoder.hpp"

namespace srupp {

struct ProfileComponent {
  std::string name;
  std::uint64_t params = 0;
  std::uint64_t flops = 0;
};

struct ProfileReport {
  std::vector<ProfileComponent> components;
  std::string convention;
  std::vector<std::pair<std::string, std::string>> assumptions;
  std::int64_t input_len = 0;  // 0 for parameter-only reports

  std::uint64_t total_params() const;
  std::uint64_t total_flops() const;
  const ProfileComponent* find(const std::string& name) const;

  std::string to_text() const;
  std::string to_csv() const;
};

// Closed-form parameter counts per component; no tensors are materialized,
// so arbitrarily large configurations are fine.
ProfileReport param_count(const EncoderConfig& cfg);

// Forward FLOPs at the given input length, including parameter counts.
// The residual add is counted unconditionally (the trained regime has
// alpha != 0); the reported assumptions say so.
ProfileReport flops_estimate(const EncoderConfig& cfg, std::int64_t input_len);

}  // namespace srupp
