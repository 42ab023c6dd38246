#pragma once

#include <stdexcept>
#include <string>

namespace vbgp {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments or an invalid configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Kernel / input-measure combination without a closed-form eigensystem.
class UnsupportedError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Numerical breakdown (CLI exit code 3).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class FactorizationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class OverflowError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Raised when the inducing covariance is too ill-conditioned for the
/// requested number of inducing variables. `max_usable_m` is the largest m
/// that would have passed the check.
class ConditioningError : public NumericalError {
 public:
  ConditioningError(const std::string& what, long max_usable_m)
      : NumericalError(what), max_usable_m_(max_usable_m) {}

  [[nodiscard]] long max_usable_m() const noexcept { return max_usable_m_; }

 private:
  long max_usable_m_;
};

}  // namespace vbgp
