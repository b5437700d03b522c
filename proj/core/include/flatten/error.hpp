#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace flatten {

enum class ErrorCode {
  kDegenerateIFS,
  kNonContraction,
  kBadWeights,
  kTauOutOfRange,
  kSizeOverflow,
  kDomainViolation,
  kDimMismatch,
  kAtomBudgetExceeded,
  kInsufficientScales,
  kIdenticallyZero,
  kTauUnderflow,
  kGridBudgetExceeded,
  kLevelOutOfRange,
  kInvalidArgument,
  kConfigError,
  kIoError,
  kParseError,
};

std::string_view error_code_name(ErrorCode code);

/// True for the errors that mean "the requested run is too large", as opposed
/// to bad input or a numeric failure.
bool is_budget_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace flatten
