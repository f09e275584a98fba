#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ionreadout {

/// A parameter violates an operation's precondition.
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A record does not cover the window a decision needs.
class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data carries no information for the requested estimate.
class DegenerateData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed tabular input; row and column are 1-based (0 = unknown).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t row, std::size_t column)
      : std::runtime_error(what + " (row " + std::to_string(row) + ", column " +
                           std::to_string(column) + ")"),
        row_(row),
        column_(column) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

inline void require(bool condition, const char* message) {
  if (!condition) throw InvalidParameter(message);
}

}  // namespace ionreadout
