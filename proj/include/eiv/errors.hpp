#pragma once

#include <stdexcept>
#include <string>

namespace eiv {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or out-of-contract input: bad CSV, degenerate statistics, bad config.
struct InvalidInputError : Error {
  using Error::Error;
};

// An estimator hit a pole. Callers count these events; they are never averaged.
struct SingularEstimateError : Error {
  using Error::Error;
};

// A moment formula was requested outside its validity window.
struct ValidityWindowError : Error {
  using Error::Error;
};

// A series or quadrature failed to reach the requested tolerance.
struct ConvergenceError : Error {
  using Error::Error;
};

}  // namespace eiv
