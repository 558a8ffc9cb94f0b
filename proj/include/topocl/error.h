// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace topocl {

//! Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

//! Input file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

//! A structured document (JSON graph, config, checkpoint manifest) violates its schema.
//! `path()` points at the offending element, e.g. `/edges/3/u`.
class SchemaError : public Error {
 public:
  SchemaError(std::string path, const std::string& message)
      : Error(path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

//! Vectors or matrices that must agree in length do not.
class LengthMismatch : public Error {
 public:
  using Error::Error;
};

//! A norm used as a divisor is zero.
class ZeroNorm : public Error {
 public:
  using Error::Error;
};

//! A precondition on a numeric argument (range, count, fraction) is violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

//! Training produced a NaN or infinite loss.
class NonFiniteLoss : public Error {
 public:
  using Error::Error;
};

}  // namespace topocl
