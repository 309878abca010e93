#pragma once

#include <stdexcept>
#include <string>

namespace rofdd {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands live on incompatible grids or have the wrong length.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A solver or run parameter violates its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// The requested subdomain partition is not admissible.
class DecompositionError : public Error {
 public:
  using Error::Error;
};

/// A file could not be opened, read, or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed input bytes (PGM header, truncated payload, ...).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver produced non-finite values.
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace rofdd
