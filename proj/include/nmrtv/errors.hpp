#pragma once

#include <stdexcept>
#include <string>

namespace nmrtv {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Input has no information to work with (zero variance, zero energy).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents: missing or ill-typed header fields.
class FormatError : public Error {
 public:
  using Error::Error;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

class ShapeMismatch : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Tensor names or shapes differ from the expected architecture.
class SchemaMismatch : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Payload byte count differs from what the header declares.
class LengthMismatch : public FormatError {
 public:
  using FormatError::FormatError;
};

class NonFiniteValue : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace nmrtv
