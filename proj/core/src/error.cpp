#include "flatten/error.hpp"

namespace flatten {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDegenerateIFS: return "DegenerateIFS";
    case ErrorCode::kNonContraction: return "NonContraction";
    case ErrorCode::kBadWeights: return "BadWeights";
    case ErrorCode::kTauOutOfRange: return "TauOutOfRange";
    case ErrorCode::kSizeOverflow: return "SizeOverflow";
    case ErrorCode::kDomainViolation: return "DomainViolation";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kAtomBudgetExceeded: return "AtomBudgetExceeded";
    case ErrorCode::kInsufficientScales: return "InsufficientScales";
    case ErrorCode::kIdenticallyZero: return "IdenticallyZero";
    case ErrorCode::kTauUnderflow: return "TauUnderflow";
    case ErrorCode::kGridBudgetExceeded: return "GridBudgetExceeded";
    case ErrorCode::kLevelOutOfRange: return "LevelOutOfRange";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kParseError: return "ParseError";
  }
  return "Unknown";
}

bool is_budget_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSizeOverflow:
    case ErrorCode::kAtomBudgetExceeded:
    case ErrorCode::kTauUnderflow:
    case ErrorCode::kGridBudgetExceeded:
      return true;
    default:
      return false;
  }
}

}  // namespace flatten
