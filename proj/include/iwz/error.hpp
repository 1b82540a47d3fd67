#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace iwz {

enum class ErrorCode {
  NegativeProbability,
  SumNotOne,
  DimensionMismatch,
  NonPositiveDefinite,
  InvalidArgument,
  OutOfSupport,
  AllZeroRow,
  NumericalCollapse,
  NotPSD,
  NoSupport,
  BudgetExceeded,
  Schema,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Library-wide exception. The code drives CLI exit status.
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
    case ErrorCode::NegativeProbability: return "NegativeProbability";
    case ErrorCode::SumNotOne: return "SumNotOne";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonPositiveDefinite: return "NonPositiveDefinite";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::OutOfSupport: return "OutOfSupport";
    case ErrorCode::AllZeroRow: return "AllZeroRow";
    case ErrorCode::NumericalCollapse: return "NumericalCollapse";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::NoSupport: return "NoSupport";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::Schema: return "Schema";
  }
  return "Unknown";
}

}  // namespace iwz
