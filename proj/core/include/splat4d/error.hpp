#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace splat4d {

enum class ErrorCode {
  // splat_model
  MissingProperty,
  Truncated,
  NonFinite,
  UnsupportedFormat,
  ParseError,
  NonMonotoneTimestamps,
  EmptySequence,
  EmptyCloud,
  // trajectory
  EmptyTrajectory,
  InvalidFps,
  DegenerateBasis,
  // foveation
  DimMismatch,
  // selection_edit
  StaleMask,
  DegenerateShape,
  EmptySelection,
  EmptyHistory,
  // metrics
  ZeroVector,
  ProviderFailure,
  // video_export
  SinkFailure,
  SpawnFailure,
  EncoderExitNonzero,
  // session
  UnknownCommand,
  ValidationFailed,
  ExportBusy,
  NotFound,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Library-wide exception. `offset` is set for parse errors that can name a byte position;
/// `detail_code` carries an integer payload (e.g. an encoder exit status).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::optional<std::uint64_t> offset = std::nullopt,
        int detail_code = 0)
      : std::runtime_error(message), code_(code), offset_(offset), detail_code_(detail_code) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::uint64_t> offset() const noexcept { return offset_; }
  int detail_code() const noexcept { return detail_code_; }

 private:
  ErrorCode code_;
  std::optional<std::uint64_t> offset_;
  int detail_code_;
};

}  // namespace splat4d
