#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace conclab {

enum class ErrorCode {
  NotSPD,
  IntegrationFailure,
  DomainEscape,
  OutsideInjectivity,
  NoConvergence,
  Disconnected,
  RegionTooFine,
  NotInDiscretization,
  LatticeMismatch,
  UnsupportedExponent,
  NotCauchy,
  NoConvergedPairs,
  IncompatibleProfile,
  IncompatibleProfiles,
  CoveringGap,
  ParseError,
  ConstraintViolation,
  InvalidArgument,
  IoError,
};

std::string_view error_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace conclab
