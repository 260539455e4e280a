#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vadkit {

enum class ErrorCode {
  MalformedWav,
  UnsupportedFormat,
  IoFailure,
  OutOfRange,
  InvalidRate,
  InvalidSpec,
  RateMismatch,
  EmptySignal,
  NoFrames,
  LengthMismatch,
  SilentComponent,
  InvalidFft,
  LabelOutOfRange,
  InvalidConfig,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedWav: return "MalformedWav";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::InvalidRate: return "InvalidRate";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::RateMismatch: return "RateMismatch";
    case ErrorCode::EmptySignal: return "EmptySignal";
    case ErrorCode::NoFrames: return "NoFrames";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::SilentComponent: return "SilentComponent";
    case ErrorCode::InvalidFft: return "InvalidFft";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

/// Every failure raised by the library. The code identifies the failure
/// class; the message carries the human-readable context (paths, values).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vadkit
