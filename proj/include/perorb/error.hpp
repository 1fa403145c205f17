#ifndef PERORB_ERROR_HPP
#define PERORB_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace perorb {

enum class ErrorCode {
  GapTooLarge,
  NonPositivePeriod,
  DimensionMismatch,
  SolveFailure,
  LineSearchStall,
  InsufficientTail,
  BadBracket,
  TruncationAboveMax,
  TruncationInfeasible,
  EmptyInterval,
  BadParameters,
  ZeroWinding,
  DivergenceBelowCu,
  NoWitness,
  RadiusTooLarge,
  ClaimViolated,
  LoopLeavesChart,
  PreconditionFailed,
  InvalidModel,
  InvalidConfig,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::GapTooLarge: return "GapTooLarge";
    case ErrorCode::NonPositivePeriod: return "NonPositivePeriod";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SolveFailure: return "SolveFailure";
    case ErrorCode::LineSearchStall: return "LineSearchStall";
    case ErrorCode::InsufficientTail: return "InsufficientTail";
    case ErrorCode::BadBracket: return "BadBracket";
    case ErrorCode::TruncationAboveMax: return "TruncationAboveMax";
    case ErrorCode::TruncationInfeasible: return "TruncationInfeasible";
    case ErrorCode::EmptyInterval: return "EmptyInterval";
    case ErrorCode::BadParameters: return "BadParameters";
    case ErrorCode::ZeroWinding: return "ZeroWinding";
    case ErrorCode::DivergenceBelowCu: return "DivergenceBelowCu";
    case ErrorCode::NoWitness: return "NoWitness";
    case ErrorCode::RadiusTooLarge: return "RadiusTooLarge";
    case ErrorCode::ClaimViolated: return "ClaimViolated";
    case ErrorCode::LoopLeavesChart: return "LoopLeavesChart";
    case ErrorCode::PreconditionFailed: return "PreconditionFailed";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

/// Every recoverable failure in the library is reported through this type.
/// `field()` is non-empty when the failure can be pinned to one input field
/// (model files, configs).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string field = {})
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        field_(std::move(field)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorCode code_;
  std::string field_;
};

}  // namespace perorb

#endif  // PERORB_ERROR_HPP
