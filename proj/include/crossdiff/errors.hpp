#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace crossdiff {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Violated precondition of an operation (bad dimensions, negative dt, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Malformed input text. `line` is 1-based, 0 when not line-specific.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class MeshValidationError : public Error {
 public:
  using Error::Error;
};

class MeshNotNested : public Error {
 public:
  using Error::Error;
};

/// No positive weights pi with pi_i a_ij = pi_j a_ji exist. Indices are 0-based.
class DetailedBalanceViolation : public Error {
 public:
  DetailedBalanceViolation(std::size_t i, std::size_t j, double residual);

  std::size_t i() const { return i_; }
  std::size_t j() const { return j_; }
  double residual() const { return residual_; }

 private:
  std::size_t i_;
  std::size_t j_;
  double residual_;
};

class NotSymmetric : public Error {
 public:
  using Error::Error;
};

/// Smallest eigenvalue of (pi_i a_ij) is not positive.
class NotPositiveDefinite : public Error {
 public:
  NotPositiveDefinite(double lambda);

  double lambda() const { return lambda_; }

 private:
  double lambda_;
};

class Singular : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

/// An accepted step failed nonnegativity or mass conservation.
class CertificateViolation : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace crossdiff
