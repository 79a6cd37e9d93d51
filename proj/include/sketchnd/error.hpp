#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sketchnd {

/// Base class for every engine error. Session replies map these onto
/// structured error codes; anything else escaping is a bug.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* code() const noexcept { return "error"; }
};

/// A precondition on arguments or state was violated.
class ValidationError : public Error {
 public:
  using Error::Error;
  const char* code() const noexcept override { return "validation"; }
};

/// Malformed dataset or script text. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }
  const char* code() const noexcept override { return "parse"; }

 private:
  std::size_t line_;
};

/// A sampling procedure could not satisfy its constraints within budget.
class SamplingError : public Error {
 public:
  using Error::Error;
  const char* code() const noexcept override { return "sampling"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* code() const noexcept override { return "io"; }
};

}  // namespace sketchnd
