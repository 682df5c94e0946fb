#pragma once

#include <stdexcept>
#include <string>

namespace aan {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes that do not fit the operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid hyperparameters, schedules, or generator settings.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition on input values was violated.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class BatchSizeError : public Error {
 public:
  using Error::Error;
};

/// A loss or gradient became NaN/inf during training.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace aan
