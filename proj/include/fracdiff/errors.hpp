#pragma once

#include <stdexcept>
#include <string>

namespace fracdiff {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on user-supplied parameters was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Geometry could not be built (window overlap, domain outside the box, ...).
class GeometryError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Configuration file could not be parsed or validated.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A numerical solver failed to produce a result within its contract.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Picard iterates stopped contracting: the data are too large.
class NonContractionError : public SolverError {
 public:
  using SolverError::SolverError;
};

class QuadratureError : public SolverError {
 public:
  using SolverError::SolverError;
};

/// The recovery pipeline could not proceed (weak control, no signal, ...).
class RecoveryError : public SolverError {
 public:
  using SolverError::SolverError;
};

}  // namespace fracdiff
