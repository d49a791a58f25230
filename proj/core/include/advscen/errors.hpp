#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace advscen {

/// Shape or arity mismatch between related containers (vehicle lists,
/// network dimensions, flattened vectors).
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input. `line()` is 1-based; 0 means "no specific line".
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Required CSV column missing from a header.
class SchemaError : public std::runtime_error {
 public:
  explicit SchemaError(const std::string& column)
      : std::runtime_error("missing column: " + column), column_(column) {}

  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

/// Invalid or inconsistent configuration (bad values, missing files, empty pools).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-recoverable numerical failure while training (NaN loss or gradient,
/// empty buffer where samples are required).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace advscen
