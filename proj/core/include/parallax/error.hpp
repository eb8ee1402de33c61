#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace parallax {

enum class ErrorCategory
{
  InvalidInput,
  ShapeMismatch,
  Config,
  Calibration,
  Solver,
  Numerical,
  Io,
  MissingFile,
  MalformedHeader,
  TruncatedData,
};

// Stable, machine-readable names; the CLI prints these on failure.
constexpr std::string_view category_name(ErrorCategory c)
{
  switch (c) {
  case ErrorCategory::InvalidInput: return "invalid_input";
  case ErrorCategory::ShapeMismatch: return "shape_mismatch";
  case ErrorCategory::Config: return "config_error";
  case ErrorCategory::Calibration: return "calibration_error";
  case ErrorCategory::Solver: return "solver_error";
  case ErrorCategory::Numerical: return "numerical_error";
  case ErrorCategory::Io: return "io_error";
  case ErrorCategory::MissingFile: return "missing_file";
  case ErrorCategory::MalformedHeader: return "malformed_header";
  case ErrorCategory::TruncatedData: return "truncated_data";
  }
  return "unknown";
}

class Error : public std::runtime_error
{
public:
  Error(ErrorCategory category, std::string const &message)
    : std::runtime_error(message)
    , category_{category}
  {
  }

  ErrorCategory category() const noexcept { return category_; }

private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory category, std::string const &message)
{
  throw Error(category, message);
}

} // namespace parallax
