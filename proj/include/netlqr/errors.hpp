#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace netlqr {

enum class ErrorCode {
  AsymmetricCustomMatrix,
  AsymmetricInput,
  IndexOutOfRange,
  SpectralRadiusViolation,
  DimensionMismatch,
  InvalidArgument,
  NonFiniteBlowup,
  StepTooLarge,
  NotStabilizable,
  NoConvergence,
  SingularR,
  MismatchedSpectralData,
  AssumptionViolation,
  TimeOutOfRange,
  MissingInformation,
  GridMismatch,
  MissingRiccatiSamples,
  TooLarge,
  NotPositiveDefiniteR,
  ParseError,
  ValidationError,
};

std::string_view to_string(ErrorCode code);

// True for errors caused by bad input (as opposed to a numerical breakdown).
bool is_validation_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace netlqr
