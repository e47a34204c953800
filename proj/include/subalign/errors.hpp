// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The subalign Authors

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace subalign {

/// Root of the toolkit's exception hierarchy.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Out-of-range hyperparameter, shape mismatch or invalid label.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Malformed config or spec text (unknown key, unparsable value).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or a decomposition that failed to converge.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what, std::int64_t iterations = -1)
      : Error(what), iterations_(iterations) {}

  /// Iterations completed before the failure, or -1 when not applicable.
  std::int64_t iterations() const { return iterations_; }

 private:
  std::int64_t iterations_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

enum class FormatErrorKind {
  bad_magic,
  version_mismatch,
  truncated,
  shape_overflow,
  checksum_mismatch,
  non_finite,
  malformed,
};

const char* to_string(FormatErrorKind kind);

/// Raised by the binary readers; `kind()` tells the failure classes apart.
class FormatError : public Error {
 public:
  FormatError(FormatErrorKind kind, const std::string& what)
      : Error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  FormatErrorKind kind() const { return kind_; }

 private:
  FormatErrorKind kind_;
};

}  // namespace subalign
