#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace flowemu {

/// Invalid user-facing input: malformed config file, missing artifact.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A documented precondition was broken by the caller.
class UsageError : public std::invalid_argument {
 public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

/// Numerical failure: factorization, optimizer, propagation.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// ODE stepper could not complete a step (underflow, non-finite state).
class IntegrationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Probe trajectory left the finite domain. Carries the coordinate-wise
/// extremes observed before the failure.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, std::vector<double> partial_lower,
                  std::vector<double> partial_upper)
      : NumericalError(what),
        partial_lower_(std::move(partial_lower)),
        partial_upper_(std::move(partial_upper)) {}

  const std::vector<double>& partial_lower() const { return partial_lower_; }
  const std::vector<double>& partial_upper() const { return partial_upper_; }

 private:
  std::vector<double> partial_lower_;
  std::vector<double> partial_upper_;
};

}  // namespace flowemu
