#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hsreg {

enum class ErrorCode {
  InvalidDimension,
  DimensionMismatch,
  NotSpd,
  NumericalFailure,
  Domain,
  InvalidVariant,
  InvalidNoiseLevel,
  InfeasibleStart,
  NonTermination,
  NewtonBreakdown,
  Config,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidDimension: return "invalid-dimension";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::NotSpd: return "not-spd";
    case ErrorCode::NumericalFailure: return "numerical-failure";
    case ErrorCode::Domain: return "domain";
    case ErrorCode::InvalidVariant: return "invalid-variant";
    case ErrorCode::InvalidNoiseLevel: return "invalid-noise-level";
    case ErrorCode::InfeasibleStart: return "infeasible-start";
    case ErrorCode::NonTermination: return "non-termination";
    case ErrorCode::NewtonBreakdown: return "newton-breakdown";
    case ErrorCode::Config: return "config";
  }
  return "unknown";
}

/// Base exception of the library. Every throw site picks a code so callers
/// (the CLI in particular) can map failures to exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the Cholesky factorization; carries the zero-based pivot index.
class NotSpdError : public Error {
 public:
  NotSpdError(std::size_t pivot, double value)
      : Error(ErrorCode::NotSpd, "non-positive pivot " + std::to_string(value) + " at index " +
                                     std::to_string(pivot)),
        pivot_(pivot) {}

  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

/// Configuration problems; `field` names the offending key, `line` is 1-based
/// (0 when the value came from the command line).
class ConfigError : public Error {
 public:
  ConfigError(std::string field, std::size_t line, const std::string& what)
      : Error(ErrorCode::Config, (line ? "line " + std::to_string(line) + ": " : std::string()) +
                                     "field '" + field + "': " + what),
        field_(std::move(field)),
        line_(line) {}

  const std::string& field() const noexcept { return field_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string field_;
  std::size_t line_;
};

}  // namespace hsreg
