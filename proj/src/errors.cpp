#include "splitknock/errors.hpp"

namespace splitknock {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidParameter: return "InvalidParameter";
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::NotPositiveSemidefinite: return "NotPositiveSemidefinite";
    case ErrorKind::InsufficientDimension: return "InsufficientDimension";
    case ErrorKind::InvalidEdge: return "InvalidEdge";
    case ErrorKind::InvalidSplit: return "InvalidSplit";
    case ErrorKind::InvalidIndex: return "InvalidIndex";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InsufficientSamples: return "InsufficientSamples";
    case ErrorKind::InfeasibleS: return "InfeasibleS";
    case ErrorKind::NonConvergedPath: return "NonConvergedPath";
    case ErrorKind::InternalInvariantViolation: return "InternalInvariantViolation";
    case ErrorKind::ScreeningTooLoose: return "ScreeningTooLoose";
    case ErrorKind::InvalidFolds: return "InvalidFolds";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

bool is_validation_error(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidParameter:
    case ErrorKind::NonFiniteInput:
    case ErrorKind::InsufficientDimension:
    case ErrorKind::InvalidEdge:
    case ErrorKind::InvalidSplit:
    case ErrorKind::InvalidIndex:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::InsufficientSamples:
    case ErrorKind::ScreeningTooLoose:
    case ErrorKind::InvalidFolds:
    case ErrorKind::ParseError:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace splitknock
