#pragma once

#include <stdexcept>
#include <string>

namespace covshift {

// Bad arguments, violated preconditions, malformed configuration.
// The CLI maps these to exit code 1.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Failures while running: I/O, parsing, numeric breakdown, calibration.
// The CLI maps these to exit code 2.
struct RuntimeFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IngestError : RuntimeFailure {
  using RuntimeFailure::RuntimeFailure;
};

struct CalibrationError : RuntimeFailure {
  using RuntimeFailure::RuntimeFailure;
};

struct NumericError : RuntimeFailure {
  using RuntimeFailure::RuntimeFailure;
};

}  // namespace covshift
