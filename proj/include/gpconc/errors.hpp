#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gpconc {

enum class ErrorKind {
  InvalidParameter,
  Domain,
  DuplicatePoint,
  DimensionMismatch,
  NumericalBreakdown,
  ExhaustedCandidates,
  IndexOutOfRange,
  TailBudgetUnreachable,
  DesignNotOnGrid,
  NonsummableTail,
  HypothesisViolation,
  TruncationUnreachable,
  JmaxTooSmall,
  EmptySchedule,
  FitFailure,
  Config,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the kinds above so the
/// CLI can map it onto an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// True for errors caused by bad user input (config schema, parameter domains).
bool is_config_error(ErrorKind kind) noexcept;

}  // namespace gpconc
