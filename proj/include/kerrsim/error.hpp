#pragma once

#include <stdexcept>
#include <string>

namespace kerrsim {

// Base of every error the library raises. The CLI maps the two families
// (configuration vs. numerics) onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class InvalidParameter : public ConfigError {
 public:
  InvalidParameter(std::string name, const std::string& what)
      : ConfigError("invalid parameter '" + name + "': " + what), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class InvalidDimension : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class StepTooLarge : public NumericError {
 public:
  using NumericError::NumericError;
};

class TruncationError : public NumericError {
 public:
  TruncationError(const std::string& what, double time)
      : NumericError(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

// Non-finite classical state.
class DivergenceError : public NumericError {
 public:
  DivergenceError(const std::string& what, double time)
      : NumericError(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

// Wigner reconstruction with an imaginary part beyond tolerance.
class HermiticityError : public NumericError {
 public:
  using NumericError::NumericError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace kerrsim
