// Copyright 2026 The srupp authors. Apache 2.0 License.
//
// Finite-difference gradient checking for the SRU layer, the SRU++ layer,
// and the full encoder.  Central differences with step 1e-5 per scalar
// parameter and input entry, 64-bit only; the relative error is
// |a - b| / max(1e-8, |a| + |b|).

#pragma once

#include <cstdint>
#include <string>

namespace srupp {

enum class GradTarget { Sru, Srupp, Encoder };

struct GradcheckOptions {
  // Zero every parameter before checking (gradients of the input still
  // flow); a sanity configuration that passes at a tighter tolerance.
  bool zero_params = false;
  // Deliberately negate the analytic alpha gradient.  The check must then
  // report a large error; used by the mutation test that proves the checker
  // can catch a wrong backward pass.
  bool flip_alpha_grad = false;
};

struct GradcheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
};

// Builds a small randomized instance of the target (layer sizes fixed,
// parameter and input values drawn from instance_seed; bidirectional and
// normalization variants alternate with the seed), computes analytic
// gradients of loss = sum(output), and compares every coordinate against
// central finite differences.
GradcheckReport gradcheck(GradTarget target, std::uint64_t instance_seed,
                          const GradcheckOptions& opts = {});

}  // namespace srupp
