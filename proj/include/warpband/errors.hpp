#pragma once

#include <stdexcept>
#include <string>

namespace warpband {

// Base for everything thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File / config problems. The CLI maps these to exit code 1.
class IoError : public Error {
 public:
  using Error::Error;
};

// Numerical / model problems. The CLI maps these to exit code 2.
class NumericError : public Error {
 public:
  using Error::Error;
};

// n <= p: fewer observations than basis terms.
class UnderdeterminedError : public NumericError {
 public:
  using NumericError::NumericError;
};

// Design matrix numerically rank deficient.
class RankError : public NumericError {
 public:
  using NumericError::NumericError;
};

// sigma^2 == 0: the posterior is a point mass and a band cannot be
// standardized.
class DegeneratePosteriorError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace warpband
