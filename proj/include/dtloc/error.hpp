// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace dtloc {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (scene, report, experiment config).
class ParseError : public Error {
public:
  using Error::Error;
};

/// Input parsed but violates an invariant; `field()` names the offending field.
class ValidationError : public Error {
public:
  ValidationError(std::string field, const std::string &what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string &field() const noexcept { return field_; }

private:
  std::string field_;
};

/// Binary RF-map container problems.
class FormatError : public Error {
public:
  using Error::Error;
};
class VersionError : public FormatError {
public:
  using FormatError::FormatError;
};
class ChecksumError : public FormatError {
public:
  using FormatError::FormatError;
};
class TruncatedError : public FormatError {
public:
  using FormatError::FormatError;
};

/// A report or database refers to a different digital replica.
class SceneMismatchError : public Error {
public:
  using Error::Error;
};

} // namespace dtloc
