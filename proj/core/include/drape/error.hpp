#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace drape {

enum class ErrorCode {
  DegenerateTriangle,
  InvalidUvPoint,
  InvalidMesh,
  OutOfDomain,
  InconsistentDims,
  ShapeMismatch,
  IoFailure,
  FormatVersionMismatch,
  InvalidStructure,
  ZeroRestLength,
  EmptyCollider,
  DegenerateMesh,
  AllPointsInvalid,
  NonFiniteLoss,
  BudgetMismatch,
  ConfigError,
  ParseError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can branch without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DegenerateTriangle: return "DegenerateTriangle";
    case ErrorCode::InvalidUvPoint: return "InvalidUvPoint";
    case ErrorCode::InvalidMesh: return "InvalidMesh";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::InconsistentDims: return "InconsistentDims";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::FormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorCode::InvalidStructure: return "InvalidStructure";
    case ErrorCode::ZeroRestLength: return "ZeroRestLength";
    case ErrorCode::EmptyCollider: return "EmptyCollider";
    case ErrorCode::DegenerateMesh: return "DegenerateMesh";
    case ErrorCode::AllPointsInvalid: return "AllPointsInvalid";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::BudgetMismatch: return "BudgetMismatch";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace drape
