#ifndef DISTLQR_ERRORS_HPP
#define DISTLQR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace distlqr {

// Base for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes of supplied matrices/vectors are inconsistent.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A value failed construction-time validation (definiteness, ranges, ...).
class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

// The closed loop is not mean-square stable where that is required.
class UnstableGainError : public Error {
 public:
  using Error::Error;
};

// Fixed-point iteration did not reach the residual tolerance.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, double last_residual)
      : Error(what), last_residual(last_residual) {}
  double last_residual;
};

// Operation on an empty sample set.
class EmptyDistributionError : public Error {
 public:
  using Error::Error;
};

// A theorem hypothesis does not hold for the supplied inputs.
class HypothesisError : public Error {
 public:
  using Error::Error;
};

// Failure reading or writing artifact files.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace distlqr

#endif  // DISTLQR_ERRORS_HPP
