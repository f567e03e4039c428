#pragma once

#include <stdexcept>
#include <string>

namespace fidbound {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Operands with incompatible dimensions.
class ShapeError : public Error {
public:
  using Error::Error;
};

// A value violates a documented invariant (norm, CPTP, Choi conditions...).
class ValidationError : public Error {
public:
  using Error::Error;
};

// A matrix is too ill-conditioned for the requested quantity to be meaningful.
class ConditioningError : public Error {
public:
  ConditioningError(const std::string &what, double smallest_singular_value)
      : Error(what), smallest_singular_value_(smallest_singular_value) {}
  double smallest_singular_value() const noexcept { return smallest_singular_value_; }

private:
  double smallest_singular_value_;
};

// A method's preconditions on the input set are not met (e.g. the symmetric
// POVM bound requested for a set that is not a symmetric POVM).
class InapplicableError : public Error {
public:
  using Error::Error;
};

// The SDP solver did not return an optimal solution.
class SolverError : public Error {
public:
  using Error::Error;
};

} // namespace fidbound
