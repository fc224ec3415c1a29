#pragma once

#include <stdexcept>
#include <string>

namespace mdins {

/// Argument outside the mathematical domain of an operation (negative loss,
/// probability outside its interval, missing moment).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical procedure (quadrature, bracketing) could not deliver a result.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A solver failed to converge; the message carries the iteration trace.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The requested combination is not covered by any implemented routine.
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace mdins
