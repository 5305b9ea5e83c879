#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace splitknock {

enum class ErrorKind {
  InvalidParameter,
  NonFiniteInput,
  NotPositiveDefinite,
  NotPositiveSemidefinite,
  InsufficientDimension,
  InvalidEdge,
  InvalidSplit,
  InvalidIndex,
  DimensionMismatch,
  InsufficientSamples,
  InfeasibleS,
  NonConvergedPath,
  InternalInvariantViolation,
  ScreeningTooLoose,
  InvalidFolds,
  ParseError,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Validation errors are the caller's fault (bad flags, bad shapes, too few
// samples); everything else is a numeric failure.
bool is_validation_error(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace splitknock
