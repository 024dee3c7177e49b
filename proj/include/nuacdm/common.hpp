#pragma once
#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace nuacdm {

using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad parameters or inputs (dimension mismatch, negative weights, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed text input. Carries a 1-based line and column when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"),
        line_(line),
        column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// A runtime invariant check (descent lemma, mirror-step optimality) failed.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

// An iterate or objective value became non-finite.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// An iterative reference computation ran out of budget.
class ConvergenceFailure : public Error {
 public:
  using Error::Error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

}  // namespace nuacdm
