#include "modalreg/error.hpp"

namespace modalreg {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "E_INVALID_ARGUMENT";
    case ErrorCode::DegenerateWindow: return "E_DEGENERATE_WINDOW";
    case ErrorCode::SingularDesign: return "E_SINGULAR_DESIGN";
    case ErrorCode::NonconcaveAtZero: return "E_NONCONCAVE_AT_ZERO";
    case ErrorCode::ZeroCurvature: return "E_ZERO_CURVATURE";
    case ErrorCode::InvalidPlugin: return "E_INVALID_PLUGIN";
    case ErrorCode::OutOfRange: return "E_OUT_OF_RANGE";
    case ErrorCode::AllFitsFailed: return "E_ALL_FITS_FAILED";
    case ErrorCode::RateViolation: return "E_RATE_VIOLATION";
    case ErrorCode::TooManyFailures: return "E_TOO_MANY_FAILURES";
    case ErrorCode::ParseError: return "E_PARSE";
    case ErrorCode::DimensionError: return "E_DIMENSION";
    case ErrorCode::NonFiniteError: return "E_NON_FINITE";
    case ErrorCode::MethodError: return "E_METHOD";
    case ErrorCode::IoError: return "E_IO";
  }
  return "E_UNKNOWN";
}

bool is_validation_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::OutOfRange:
    case ErrorCode::RateViolation:
    case ErrorCode::ParseError:
    case ErrorCode::DimensionError:
    case ErrorCode::NonFiniteError:
    case ErrorCode::MethodError:
    case ErrorCode::IoError:
      return true;
    default:
      return false;
  }
}

}  // namespace modalreg
