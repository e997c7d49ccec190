#pragma once

#include <stdexcept>
#include <string>

namespace sacflow {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point lies outside the enclosing box.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An argument violates its documented precondition.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A step or node index is out of range.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// The discrete flow stopped being a diffeomorphism; retry with a smaller time step.
class StepSizeError : public Error {
 public:
  using Error::Error;
};

/// Newton inversion of a flow slice did not converge.
class InversionError : public Error {
 public:
  InversionError(const std::string& what, double worst_residual)
      : Error(what), worst_residual_(worst_residual) {}
  double worst_residual() const noexcept { return worst_residual_; }

 private:
  double worst_residual_;
};

/// Diffusion coefficient lost uniform ellipticity.
class DegenerateCoefficientError : public Error {
 public:
  using Error::Error;
};

/// Linear solver failure.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// A discrete stability bound was violated (CFL, maximum principle).
class StabilityError : public Error {
 public:
  using Error::Error;
};

/// Malformed or invalid configuration. `line` is 0 when not line-anchored.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = 0, std::string key = {})
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line),
        key_(std::move(key)) {}
  int line() const noexcept { return line_; }
  const std::string& key() const noexcept { return key_; }

 private:
  int line_;
  std::string key_;
};

}  // namespace sacflow
