#pragma once

#include <stdexcept>
#include <string>

namespace hpcbbo {

/// Precondition violated by the caller (bad dimension, bad bound, bad count).
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Covariance factorization failed even after the maximum jitter.
class IllConditionedModel : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Integrator state became non-finite.
class NumericBlowup : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Thrown by an objective to stop the whole run; never swallowed as a bad evaluation.
class RunAborted : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InsufficientData : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file; `row` is 1-based, 0 when unknown.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, std::size_t row = 0)
      : std::runtime_error(row ? what + " (row " + std::to_string(row) + ")" : what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

private:
  std::size_t row_;
};

}  // namespace hpcbbo
