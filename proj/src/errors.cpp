#include "gpconc/errors.hpp"

namespace gpconc {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidParameter: return "invalid-parameter";
    case ErrorKind::Domain: return "domain-error";
    case ErrorKind::DuplicatePoint: return "duplicate-point";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::NumericalBreakdown: return "numerical-breakdown";
    case ErrorKind::ExhaustedCandidates: return "exhausted-candidates";
    case ErrorKind::IndexOutOfRange: return "index-out-of-range";
    case ErrorKind::TailBudgetUnreachable: return "tail-budget-unreachable";
    case ErrorKind::DesignNotOnGrid: return "design-not-on-grid";
    case ErrorKind::NonsummableTail: return "nonsummable-tail";
    case ErrorKind::HypothesisViolation: return "hypothesis-violation";
    case ErrorKind::TruncationUnreachable: return "truncation-unreachable";
    case ErrorKind::JmaxTooSmall: return "jmax-too-small";
    case ErrorKind::EmptySchedule: return "empty-schedule";
    case ErrorKind::FitFailure: return "fit-failure";
    case ErrorKind::Config: return "config-error";
    case ErrorKind::Io: return "io-error";
  }
  return "unknown-error";
}

bool is_config_error(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidParameter:
    case ErrorKind::Domain:
    case ErrorKind::DuplicatePoint:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::IndexOutOfRange:
    case ErrorKind::EmptySchedule:
    case ErrorKind::JmaxTooSmall:
    case ErrorKind::Config:
      return true;
    default:
      return false;
  }
}

}  // namespace gpconc
