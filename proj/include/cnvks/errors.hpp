#pragma once

#include <stdexcept>
#include <string>

namespace cnvks {

enum class ErrorCode {
  // data model / ingestion
  DimensionMismatch,
  NonFiniteValue,
  DuplicateLocation,
  MalformedRow,
  LengthMismatch,
  NonBinaryValue,
  DegenerateGroups,
  IoError,
  // marker tests
  ZeroVariancePredictor,
  ZeroVariance,
  DegenerateResiduals,
  // kernel aggregation
  MissingSign,
  KTooLarge,
  EmptySupport,
  AllMasked,
  InvalidSpec,
  // significance
  InvalidB,
  InvalidAlpha,
  // simulation
  InvalidScenario,
};

const char* error_code_name(ErrorCode code);

/// Library-wide exception carrying a stable error code alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::DuplicateLocation: return "DuplicateLocation";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NonBinaryValue: return "NonBinaryValue";
    case ErrorCode::DegenerateGroups: return "DegenerateGroups";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ZeroVariancePredictor: return "ZeroVariancePredictor";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::DegenerateResiduals: return "DegenerateResiduals";
    case ErrorCode::MissingSign: return "MissingSign";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::EmptySupport: return "EmptySupport";
    case ErrorCode::AllMasked: return "AllMasked";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InvalidB: return "InvalidB";
    case ErrorCode::InvalidAlpha: return "InvalidAlpha";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
  }
  return "UnknownError";
}

}  // namespace cnvks
