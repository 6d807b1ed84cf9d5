#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace guitod {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (XML, JSON, action grammar). Carries a 1-based
/// line/column when the source is line-oriented, otherwise a byte offset.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(what + " (line " + std::to_string(line) + ", column " +
              std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (offset " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t line_ = 0;
  std::size_t column_ = 0;
  std::size_t offset_ = 0;
};

/// Well-formed input that violates a data-model invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A click position that no item on the screen contains.
class ResolutionError : public Error {
 public:
  ResolutionError(const std::string& what, int x, int y)
      : Error(what), x_(x), y_(y) {}

  int x() const noexcept { return x_; }
  int y() const noexcept { return y_; }

 private:
  int x_;
  int y_;
};

/// Predictions that do not cover the gold data points exactly once.
class CoverageError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace guitod
