#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cim {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller supplied parameters or data that violate a precondition.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Malformed problem file; carries the 1-based line number.
class ParseError : public InvalidInput {
 public:
  ParseError(std::size_t line, const std::string& what)
      : InvalidInput("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A formula was evaluated outside the region where it is defined
/// (q >= 1, q_tilde <= p, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Evaluation hit a pole of the formula (|mu_j| = 1, q_tilde = p, ...).
class SingularityError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Integration produced a non-finite state.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, long long step, long long trajectory = -1)
      : Error(what), step_(step), trajectory_(trajectory) {}
  long long step() const noexcept { return step_; }
  long long trajectory() const noexcept { return trajectory_; }

 private:
  long long step_;
  long long trajectory_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace cim
