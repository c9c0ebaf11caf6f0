#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace soda {

enum class ErrorCode {
  MalformedRecord,
  NonMonotoneFrames,
  EmptySequence,
  OutOfGrid,
  IoFailure,
  VersionMismatch,
  InvalidAssignment,
  StateSpaceTooLarge,
  InvalidArgument,
  InsufficientSamples,
  DegenerateData,
  DimensionMismatch,
  LengthMismatch,
  SymbolOutOfRange,
  EmptyHistogram,
  InvalidPmf,
  WindowTooLarge,
  EmptyInput,
  ClassTooSmall,
  NoTrainData,
  InvalidSpec,
  IncompatibleAlphabets,
  InvalidConfig,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every recoverable failure in the library is reported as a soda::Error.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::NonMonotoneFrames: return "NonMonotoneFrames";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::OutOfGrid: return "OutOfGrid";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::InvalidAssignment: return "InvalidAssignment";
    case ErrorCode::StateSpaceTooLarge: return "StateSpaceTooLarge";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::SymbolOutOfRange: return "SymbolOutOfRange";
    case ErrorCode::EmptyHistogram: return "EmptyHistogram";
    case ErrorCode::InvalidPmf: return "InvalidPmf";
    case ErrorCode::WindowTooLarge: return "WindowTooLarge";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ClassTooSmall: return "ClassTooSmall";
    case ErrorCode::NoTrainData: return "NoTrainData";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::IncompatibleAlphabets: return "IncompatibleAlphabets";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

}  // namespace soda
