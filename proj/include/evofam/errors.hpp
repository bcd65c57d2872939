#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace evofam {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of an operation (t < s, t > T, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration, empty sample plan, violated CFL condition.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Operation requested on a value in the wrong representation.
class StateError : public Error {
 public:
  using Error::Error;
};

/// Closed-form oracle requested for inputs it does not cover.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Non-finite or near-singular value; carries the offending frequency bin.
class NumericError : public Error {
 public:
  static constexpr std::size_t no_bin = static_cast<std::size_t>(-1);

  explicit NumericError(const std::string& what, std::size_t bin = no_bin)
      : Error(bin == no_bin ? what : what + " (bin " + std::to_string(bin) + ")"), bin_(bin) {}

  std::size_t bin() const noexcept { return bin_; }

 private:
  std::size_t bin_;
};

/// Picard iteration did not contract within the sweep budget.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : Error(what + " (last residual " + std::to_string(last_residual) + ")"),
        last_residual_(last_residual) {}

  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

}  // namespace evofam
