// Copyright 2026 The rlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace rlab {

/// Base for every error raised by the library. The CLI maps subclasses to
/// exit codes: ValidationError -> 2, NetworkError -> 4, everything else -> 3.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "runtime"; }
};

/// Bad user input: malformed configs, unknown names, out-of-range values.
class ValidationError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "validation"; }
};

/// Operand shapes do not conform to the requested op.
class ShapeError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "shape"; }
};

/// A forward value or recurrent state became inf/NaN.
class OverflowError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "overflow"; }
};

/// Text that failed to parse; position is a token or byte index.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t position)
      : ValidationError(what + " (at position " + std::to_string(position) + ")"),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }
  const char* kind() const noexcept override { return "parse"; }

 private:
  std::size_t position_;
};

class NetworkError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "network"; }
};

}  // namespace rlab
