#include "conclab/error.hpp"

namespace conclab {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotSPD: return "NotSPD";
    case ErrorCode::IntegrationFailure: return "IntegrationFailure";
    case ErrorCode::DomainEscape: return "DomainEscape";
    case ErrorCode::OutsideInjectivity: return "OutsideInjectivity";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::Disconnected: return "Disconnected";
    case ErrorCode::RegionTooFine: return "RegionTooFine";
    case ErrorCode::NotInDiscretization: return "NotInDiscretization";
    case ErrorCode::LatticeMismatch: return "LatticeMismatch";
    case ErrorCode::UnsupportedExponent: return "UnsupportedExponent";
    case ErrorCode::NotCauchy: return "NotCauchy";
    case ErrorCode::NoConvergedPairs: return "NoConvergedPairs";
    case ErrorCode::IncompatibleProfile: return "IncompatibleProfile";
    case ErrorCode::IncompatibleProfiles: return "IncompatibleProfiles";
    case ErrorCode::CoveringGap: return "CoveringGap";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ConstraintViolation: return "ConstraintViolation";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace conclab
