#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dairector {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed corpus input. Line and column are 1-based; 0 means unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line = 0, std::size_t column = 0)
      : Error(format(message, line, column)), line_(line), column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& message, std::size_t line, std::size_t column) {
    if (line == 0) return message;
    return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message;
  }

  std::size_t line_;
  std::size_t column_;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Persisted artifact does not match the corpus or model it is loaded against.
class HashMismatchError : public Error {
 public:
  using Error::Error;
};

// Operation not permitted in the current state (e.g. advancing an ended session).
class StateError : public Error {
 public:
  using Error::Error;
};

}  // namespace dairector
