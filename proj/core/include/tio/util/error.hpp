#pragma once

#include <stdexcept>
#include <string>

namespace tio {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an operation precondition (wrong length, non-scalar loss, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Out-of-range hyperparameter such as a dropout rate.
class ParameterError : public Error {
 public:
  using Error::Error;
};

class InvalidPoolError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value encountered where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class AlignmentError : public Error {
 public:
  using Error::Error;
};

class EmptyAssociationError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A required upstream artifact (checkpoint, stage) is missing.
class DependencyError : public Error {
 public:
  using Error::Error;
};

/// Artifacts were produced under incompatible configurations.
class CompatibilityError : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace tio
