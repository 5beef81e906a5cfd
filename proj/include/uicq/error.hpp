#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace uicq {

enum class ErrorCode {
  MalformedFile,
  UnsupportedFormat,
  InvalidArgument,
  EmptyInput,
  InvalidWeights,
  ImageTooSmall,
  ShapeMismatch,
  BadLayerSelection,
  EmptyBatch,
  EmptyDataset,
  DivergedLoss,
  CorruptCheckpoint,
  VersionMismatch,
  LengthMismatch,
  DegenerateInput,
  IoFailure,
};

std::string_view error_code_name(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so callers
// (the CLI in particular) can map it to a diagnostic without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace uicq
