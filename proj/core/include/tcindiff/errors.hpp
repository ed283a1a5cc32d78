#pragma once

#include <stdexcept>
#include <string>

namespace tcindiff {

// Input outside the domain an operation is defined on.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A numerical procedure failed to meet its tolerance. Carries the best
// estimate reached and an error bound when one is available.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, double estimate = 0.0, double error_bound = 0.0)
      : std::runtime_error(what), estimate_(estimate), error_bound_(error_bound) {}
  double estimate() const noexcept { return estimate_; }
  double error_bound() const noexcept { return error_bound_; }

 private:
  double estimate_;
  double error_bound_;
};

// The no-trade band collapses because the slope of the frictionless target vanishes.
class DegenerateBandError : public NumericError {
 public:
  using NumericError::NumericError;
};

// Oracle lattice too coarse to resolve the band.
class ResolutionError : public NumericError {
 public:
  using NumericError::NumericError;
};

// Analytic partials disagree with finite differences.
class InternalConsistencyError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace tcindiff
