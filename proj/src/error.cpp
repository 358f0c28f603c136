#include "bbdyn/error.hpp"

namespace bbdyn {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::BadSpectrum: return "BadSpectrum";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroGradient: return "ZeroGradient";
    case ErrorCode::ZeroInitialGradient: return "ZeroInitialGradient";
    case ErrorCode::ZeroPreviousCoefficients: return "ZeroPreviousCoefficients";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::DegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorCode::InsufficientTrajectory: return "InsufficientTrajectory";
    case ErrorCode::LedgerMismatch: return "LedgerMismatch";
    case ErrorCode::NonPositiveNorm: return "NonPositiveNorm";
    case ErrorCode::DimensionTooSmall: return "DimensionTooSmall";
    case ErrorCode::Config: return "ConfigError";
    case ErrorCode::Io: return "IoError";
  }
  return "Unknown";
}

}  // namespace bbdyn
