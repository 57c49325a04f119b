#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace modalreg {

enum class ErrorCode {
  InvalidArgument,
  DegenerateWindow,
  SingularDesign,
  NonconcaveAtZero,
  ZeroCurvature,
  InvalidPlugin,
  OutOfRange,
  AllFitsFailed,
  RateViolation,
  TooManyFailures,
  ParseError,
  DimensionError,
  NonFiniteError,
  MethodError,
  IoError,
};

// Machine-readable code, e.g. "E_SINGULAR_DESIGN".
std::string_view error_code_name(ErrorCode code) noexcept;

// Validation errors are caller mistakes (bad input, bad flags); the rest are
// numerical failures of an otherwise valid request.
bool is_validation_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(ErrorCode::InvalidArgument, what);
}

}  // namespace modalreg
