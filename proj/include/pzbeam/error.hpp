#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pzbeam {

enum class ErrorKind {
  AssumptionViolated,
  DimensionMismatch,
  InvalidArgument,
  IterationCap,
  NewtonDiverged,
  BlowUp,
  SingularJacobian,
  NonpositiveData,
  EmptySet,
  ParseError,
  ValidationError,
  IoError,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::AssumptionViolated: return "assumption-violated";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::IterationCap: return "iteration-cap";
    case ErrorKind::NewtonDiverged: return "newton-diverged";
    case ErrorKind::BlowUp: return "blow-up";
    case ErrorKind::SingularJacobian: return "singular-jacobian";
    case ErrorKind::NonpositiveData: return "nonpositive-data";
    case ErrorKind::EmptySet: return "empty-set";
    case ErrorKind::ParseError: return "parse-error";
    case ErrorKind::ValidationError: return "validation-error";
    case ErrorKind::IoError: return "io-error";
  }
  return "unknown";
}

/// Every failure raised by the library. `kind` is the machine-readable tag,
/// `time` is set by the integrator when a run fails mid-flight.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::optional<double> time = std::nullopt)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        detail_(message),
        time_(time) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }
  std::optional<double> time() const noexcept { return time_; }

  Error at_time(double t) const { return Error(kind_, detail_, t); }

 private:
  ErrorKind kind_;
  std::string detail_;
  std::optional<double> time_;
};

}  // namespace pzbeam
