#pragma once

#include <stdexcept>
#include <string>

namespace solarterm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad command-line or configuration input (CLI exit code 1).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Input data violates a precondition: malformed CSV, bad dates, collinear design (exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed: bracketing, optimizer divergence, singular Hessian (exit code 3).
class EstimationError : public Error {
 public:
  using Error::Error;
};

}  // namespace solarterm
