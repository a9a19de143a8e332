#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aberray {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input document. Carries the 1-based line and the offending field.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::string field, const std::string& what)
      : Error("line " + std::to_string(line) + ", field '" + field + "': " + what),
        line_(line),
        field_(std::move(field)) {}

  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

/// A value that parsed fine but violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure (afocal system, bracket failure, non-finite loss, ...).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace aberray
