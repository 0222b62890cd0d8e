#pragma once

#include <stdexcept>
#include <string>

namespace impulse {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed DSL or expression text. Carries a 1-based source position.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

/// Input that is well formed but violates a contract (bad dimensions, values outside U, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Integration failure: non-finite state, step-size underflow.
class IntegrationError : public Error {
 public:
  using Error::Error;
};

/// A flow left the enlarged working box.
class FlowEscape : public IntegrationError {
 public:
  using IntegrationError::IntegrationError;
};

/// Push-forward of the drift has non-vanishing z-components: commutativity is broken.
class FlowBoxViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace impulse
