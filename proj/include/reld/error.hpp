#pragma once

#include <stdexcept>
#include <string>

namespace reld {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad file, directory, or frame contents.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Inputs with incompatible shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A precondition on a scalar argument was violated.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A numerical kernel could not produce a usable result.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Restricted normal equations too ill-conditioned to solve.
class RankDeficientError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Malformed or unknown configuration entries.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace reld
