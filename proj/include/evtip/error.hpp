#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace evtip {

enum class ErrorCode {
  InvalidArgument,
  TooFewPoints,
  DegenerateInput,
  NonFiniteValue,
  NoCompleteBins,
  NoNontrivialFixedPoints,
  Monostable,
  NumericalBlowUp,
  NoCrossing,
  MissingFile,
  ParseError,
  EmptySeries,
  InvalidConfig,
};

inline constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::TooFewPoints: return "too_few_points";
    case ErrorCode::DegenerateInput: return "degenerate_input";
    case ErrorCode::NonFiniteValue: return "non_finite_value";
    case ErrorCode::NoCompleteBins: return "no_complete_bins";
    case ErrorCode::NoNontrivialFixedPoints: return "no_nontrivial_fixed_points";
    case ErrorCode::Monostable: return "monostable";
    case ErrorCode::NumericalBlowUp: return "numerical_blow_up";
    case ErrorCode::NoCrossing: return "no_crossing";
    case ErrorCode::MissingFile: return "missing_file";
    case ErrorCode::ParseError: return "parse_error";
    case ErrorCode::EmptySeries: return "empty_series";
    case ErrorCode::InvalidConfig: return "invalid_config";
  }
  return "unknown";
}

/// Base exception for every failure raised by the library. The code is
/// stable and is what the CLI reports in its error JSON.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Simulation diverged; carries the step at which the guard tripped.
class BlowUpError : public Error {
 public:
  BlowUpError(std::size_t step, const std::string& what)
      : Error(ErrorCode::NumericalBlowUp, what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Row-level CSV failure. Line numbers are 1-based and count every
/// physical line of the file, comments and header included.
class ParseError : public Error {
 public:
  ParseError(ErrorCode code, std::size_t line, const std::string& what)
      : Error(code, what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// No sign change of the minima shape parameter in a scan. This is a
/// valid finding ("far from threshold"), so the observed range travels
/// with the exception.
class NoCrossingError : public Error {
 public:
  NoCrossingError(double kappa_lo, double kappa_hi, const std::string& what)
      : Error(ErrorCode::NoCrossing, what), lo_(kappa_lo), hi_(kappa_hi) {}

  double kappa_lo() const noexcept { return lo_; }
  double kappa_hi() const noexcept { return hi_; }

 private:
  double lo_;
  double hi_;
};

}  // namespace evtip
