#pragma once

#include <stdexcept>
#include <string>

namespace feederopt {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input rejected: malformed file, failed invariant, bad argument.
/// The CLI maps this family to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DisconnectedNetworkError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class MissingHourError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class UnknownElementError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class LengthMismatchError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class CapExceededError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NonRadialError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Power flow did not converge, or a search could not produce a single
/// converged evaluation. Exit code 2.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A command needs an artifact produced by an earlier command. Exit code 3.
class MissingArtifactError : public Error {
 public:
  using Error::Error;
};

}  // namespace feederopt
