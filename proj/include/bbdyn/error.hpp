#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bbdyn {

enum class ErrorCode {
  NotSymmetric,
  NotPositiveDefinite,
  BadSpectrum,
  DimensionMismatch,
  ZeroGradient,
  ZeroInitialGradient,
  ZeroPreviousCoefficients,
  IndexOutOfRange,
  DegenerateSpectrum,
  InsufficientTrajectory,
  LedgerMismatch,
  NonPositiveNorm,
  DimensionTooSmall,
  Config,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Exception type used throughout the library. The code identifies the
/// failed precondition; the message carries the details.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace bbdyn
