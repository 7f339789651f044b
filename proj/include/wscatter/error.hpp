#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wscatter {

enum class ErrorCode {
  OriginOutside,
  NotOnBoundary,
  NotUnitVector,
  CoreSingularity,
  StepLimitExceeded,
  OriginInsideTube,
  CoverageFailure,
  InvalidTube,
  InvalidScene,
  InvalidStart,
  UnitSpeedViolation,
  AllTrapped,
  UnsupportedShape,
  DuplicateNodes,
  InsufficientLayers,
  InvalidLadder,
  InvalidArgument,
  Config,
  Schema,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::OriginOutside: return "OriginOutside";
    case ErrorCode::NotOnBoundary: return "NotOnBoundary";
    case ErrorCode::NotUnitVector: return "NotUnitVector";
    case ErrorCode::CoreSingularity: return "CoreSingularity";
    case ErrorCode::StepLimitExceeded: return "StepLimitExceeded";
    case ErrorCode::OriginInsideTube: return "OriginInsideTube";
    case ErrorCode::CoverageFailure: return "CoverageFailure";
    case ErrorCode::InvalidTube: return "InvalidTube";
    case ErrorCode::InvalidScene: return "InvalidScene";
    case ErrorCode::InvalidStart: return "InvalidStart";
    case ErrorCode::UnitSpeedViolation: return "UnitSpeedViolation";
    case ErrorCode::AllTrapped: return "AllTrapped";
    case ErrorCode::UnsupportedShape: return "UnsupportedShape";
    case ErrorCode::DuplicateNodes: return "DuplicateNodes";
    case ErrorCode::InsufficientLayers: return "InsufficientLayers";
    case ErrorCode::InvalidLadder: return "InvalidLadder";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Config: return "Config";
    case ErrorCode::Schema: return "Schema";
  }
  return "Unknown";
}

/// Every recoverable failure in the library is reported through this type;
/// `code()` identifies the failure class, `what()` carries the detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace wscatter
