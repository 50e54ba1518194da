#pragma once

#include <stdexcept>
#include <string>

namespace sodi {

// Input or configuration rejected before any computation runs.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Operand shapes disagree (vector arity, grid length, node index).
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A documented mathematical side condition does not hold for the given data.
struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Operation not available for this function kind or certificate flavor.
struct UnsupportedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// NaN or Inf encountered mid-computation.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace sodi
