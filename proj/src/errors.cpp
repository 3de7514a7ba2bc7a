#include "sdsn/errors.hpp"

namespace sdsn {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NonDivisible: return "NonDivisible";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::DivergedTraining: return "DivergedTraining";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::ShapeError: return "ShapeError";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::VersionUnsupported: return "VersionUnsupported";
    case ErrorCode::InsufficientExamples: return "InsufficientExamples";
    case ErrorCode::KinkAvoidanceFailed: return "KinkAvoidanceFailed";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace sdsn
