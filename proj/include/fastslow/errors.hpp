#pragma once

#include <stdexcept>
#include <string>

namespace fastslow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (wrong dimension, boundary index, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Malformed run configuration or CLI input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An iterative method stopped before reaching its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}

  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

/// A NaN or Inf appeared during time stepping.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Requested step exceeds the explicit stability limit.
class StabilityError : public Error {
 public:
  StabilityError(const std::string& what, double dt_stable)
      : Error(what), dt_stable_(dt_stable) {}

  double dt_stable() const noexcept { return dt_stable_; }

 private:
  double dt_stable_;
};

/// Spectral decomposition could not be formed (no gap, straddled pair, singular system).
class DecompositionError : public Error {
 public:
  using Error::Error;
};

/// Sample states for the global linear surrogate are rank deficient.
class IllPosedSampleError : public DecompositionError {
 public:
  using DecompositionError::DecompositionError;
};

/// Manifold parametrization is degenerate (rank-deficient tangent, non-monotone parameter).
class ParametrizationError : public Error {
 public:
  using Error::Error;
};

/// A trajectory never reached the slow neighbourhood within the time budget.
class NonEntryError : public ConvergenceError {
 public:
  using ConvergenceError::ConvergenceError;
};

}  // namespace fastslow
