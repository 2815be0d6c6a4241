// Copyright 2026 The srupp authors. Apache 2.0 License.
//
// Exception taxonomy shared by every module.

#pragma once

#include <stdexcept>

namespace srupp {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape or dtype disagreement between operands.
struct ShapeError : Error {
  using Error::Error;
};

// A non-finite value was produced or encountered.
struct NumericError : Error {
  using Error::Error;
};

// Invalid configuration value or configuration file.
struct ConfigError : Error {
  using Error::Error;
};

// File I/O or on-disk format failure.
struct IoError : Error {
  using Error::Error;
};

// Training run aborted; the message names the failing step.
struct TrainError : Error {
  using Error::Error;
};

}  // namespace srupp
