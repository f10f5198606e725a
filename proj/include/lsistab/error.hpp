#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lsistab {

enum class ErrorKind {
  DimensionMismatch,
  NonPositiveDefiniteCovariance,
  BadWeights,
  ComponentBudgetExceeded,
  BudgetExceeded,
  DomainError,
  SingularFisherMatrix,
  TailAssumptionViolated,
  CountMismatch,
  GridTooCoarse,
  SigmaNonPositive,
  DegenerateDeficit,
  ConfigError,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonPositiveDefiniteCovariance: return "NonPositiveDefiniteCovariance";
    case ErrorKind::BadWeights: return "BadWeights";
    case ErrorKind::ComponentBudgetExceeded: return "ComponentBudgetExceeded";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::SingularFisherMatrix: return "SingularFisherMatrix";
    case ErrorKind::TailAssumptionViolated: return "TailAssumptionViolated";
    case ErrorKind::CountMismatch: return "CountMismatch";
    case ErrorKind::GridTooCoarse: return "GridTooCoarse";
    case ErrorKind::SigmaNonPositive: return "SigmaNonPositive";
    case ErrorKind::DegenerateDeficit: return "DegenerateDeficit";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace lsistab
