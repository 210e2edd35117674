#ifndef ESMPPT_ERRORS_HPP
#define ESMPPT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace esmppt {

// Base class for all library failures so callers can catch one type.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A required input violates a documented precondition or invariant.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// An iterative solver exhausted its budget without meeting tolerance.
class NoConvergence : public Error {
 public:
  using Error::Error;
};

// A function was evaluated outside its valid time/parameter domain
// (e.g. past the prescribed-time horizon).
class DomainError : public Error {
 public:
  using Error::Error;
};

// A derivative or state became NaN/Inf during evaluation.
class NonFinite : public Error {
 public:
  using Error::Error;
};

// Inductor current left continuous conduction (went negative).
class ConductionModeViolation : public Error {
 public:
  using Error::Error;
};

// Tuning parameters sit exactly on a degeneracy of the averaged system.
class DegenerateParameters : public Error {
 public:
  using Error::Error;
};

// A rate-fit window contains too few samples to be meaningful.
class WindowTooShort : public Error {
 public:
  using Error::Error;
};

// A config file or CSV could not be parsed; message carries file:line.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace esmppt

#endif
