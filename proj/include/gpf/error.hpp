#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gpf {

enum class ErrorCode {
  ZeroMeasure,
  NegativeWeight,
  UnknownAtom,
  SpaceMismatch,
  BadCoefficients,
  OutcomeSpaceMismatch,
  NotProductSpace,
  ZeroProbabilityEvent,
  DimensionMismatch,
  NumericalInconsistency,
  UnknownOutcome,
  NotProjective,
  InvalidArgument,  // a type invariant was violated on construction
  ParseError,
  ValidationError,
  DanglingReference,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroMeasure: return "ZeroMeasure";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::UnknownAtom: return "UnknownAtom";
    case ErrorCode::SpaceMismatch: return "SpaceMismatch";
    case ErrorCode::BadCoefficients: return "BadCoefficients";
    case ErrorCode::OutcomeSpaceMismatch: return "OutcomeSpaceMismatch";
    case ErrorCode::NotProductSpace: return "NotProductSpace";
    case ErrorCode::ZeroProbabilityEvent: return "ZeroProbabilityEvent";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NumericalInconsistency: return "NumericalInconsistency";
    case ErrorCode::UnknownOutcome: return "UnknownOutcome";
    case ErrorCode::NotProjective: return "NotProjective";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::DanglingReference: return "DanglingReference";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace gpf
