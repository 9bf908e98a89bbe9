#pragma once

#include <stdexcept>
#include <string>

namespace dhw {

// Exit codes of the command-line tool map one-to-one onto these classes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed config, inadmissible beam set, Hermitian conflict.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of a formula (e.g. beta <= 0 in a lattice sum).
class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Floating-point failure: non-finite matrices, step-size underflow.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A conserved quantity or certified bound was violated at run time.
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace dhw
