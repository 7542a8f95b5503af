#pragma once

#include <stdexcept>
#include <string>

namespace spg {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on caller-supplied values failed (alpha outside [0,1], bad config, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A zero standard deviation met a zero stabilizer.
class DivisionByZeroError : public Error {
 public:
  using Error::Error;
};

class EmptyStratumError : public Error {
 public:
  using Error::Error;
};

// Environment driven out of contract (acting on a terminated state, searching on the last turn).
class UsageError : public Error {
 public:
  using Error::Error;
};

class SupportCapError : public Error {
 public:
  using Error::Error;
};

// Malformed or incomplete external input. `line` is 1-based, 0 when unknown.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace spg
