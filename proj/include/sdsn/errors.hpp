#pragma once

#include <stdexcept>
#include <string>

namespace sdsn {

enum class ErrorCode {
  InvalidConfig,
  NonDivisible,
  LabelOutOfRange,
  DimMismatch,
  LengthMismatch,
  InvariantViolation,
  SingularSystem,
  DivergedTraining,
  ParseError,
  NonFinite,
  ShapeError,
  ChecksumMismatch,
  VersionUnsupported,
  InsufficientExamples,
  KinkAvoidanceFailed,
  IoError,
};

const char* error_code_name(ErrorCode code);

/// All library errors carry a code so callers can map them to exit codes
/// or assert on the failure kind without parsing messages.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace sdsn
