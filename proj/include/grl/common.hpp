#pragma once

#include <stdexcept>
#include <string>

namespace grl {

// Error categories used across the library. All are recoverable at the
// experiment-runner level (per-seed failures are logged, the run continues).

struct InvalidInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A bracketed search failed to find a sign change.
struct NoRootError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BracketError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConvergenceError : std::runtime_error {
  double last_residual = 0.0;
  ConvergenceError(const std::string& msg, double residual)
      : std::runtime_error(msg), last_residual(residual) {}
};

// An internal cross-check between two routes to the same quantity failed.
struct InvariantViolationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace grl
