#pragma once

#include <stdexcept>
#include <string>

namespace arbor {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed tree description (bad nesting, broken parent order).
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Out-of-range argument: depth < 1, p <= 1, unknown edge id.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Input that is well-formed but violates an operation's contract,
/// e.g. a negative candidate measure.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent numbers that indicate a solver fault.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver ran out of budget. Carries the best bracket found.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double best_upper, double best_lower)
      : Error(what), best_upper_(best_upper), best_lower_(best_lower) {}

  double best_upper() const noexcept { return best_upper_; }
  double best_lower() const noexcept { return best_lower_; }

 private:
  double best_upper_;
  double best_lower_;
};

}  // namespace arbor
