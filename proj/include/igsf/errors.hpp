// Error taxonomy shared by the whole library. Callers that orchestrate a
// benchmark map ParameterError/DimensionError to a configuration failure and
// NumericalError (and subclasses) to a runtime numerical failure.
#pragma once

#include <stdexcept>
#include <string>

namespace igsf {

struct FilterError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid argument values: negative step sizes, empty ensembles, bad sizes
// given as scalars, unknown enum strings.
struct ParameterError : FilterError {
  using FilterError::FilterError;
};

// Shape mismatches between matrices/vectors that should agree.
struct DimensionError : ParameterError {
  using ParameterError::ParameterError;
};

// Factorization failures, non-finite values produced mid-computation, and
// internal consistency violations. Carries optional step/mixand context so a
// long Monte Carlo run can report where it died.
struct NumericalError : FilterError {
  int step = -1;
  int mixand = -1;
  explicit NumericalError(const std::string& what) : FilterError(what) {}
};

// Particle filter importance weights underflowed to zero collectively.
struct DegeneracyError : NumericalError {
  using NumericalError::NumericalError;
};

// Bad or inconsistent values in a benchmark configuration file.
struct ConfigError : FilterError {
  using FilterError::FilterError;
};

// Rethrows a NumericalError with run position attached to the message.
[[noreturn]] inline void rethrow_with_context(NumericalError& e, int step, int mixand = -1) {
  e.step = step;
  e.mixand = mixand;
  std::string where = " [step " + std::to_string(step);
  if (mixand >= 0) where += ", mixand " + std::to_string(mixand);
  where += "]";
  NumericalError out(std::string(e.what()) + where);
  out.step = step;
  out.mixand = mixand;
  throw out;
}

}  // namespace igsf
