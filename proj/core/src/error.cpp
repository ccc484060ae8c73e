#include "splat4d/error.hpp"

namespace splat4d {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingProperty: return "missing_property";
    case ErrorCode::Truncated: return "truncated";
    case ErrorCode::NonFinite: return "non_finite";
    case ErrorCode::UnsupportedFormat: return "unsupported_format";
    case ErrorCode::ParseError: return "parse_error";
    case ErrorCode::NonMonotoneTimestamps: return "non_monotone_timestamps";
    case ErrorCode::EmptySequence: return "empty_sequence";
    case ErrorCode::EmptyCloud: return "empty_cloud";
    case ErrorCode::EmptyTrajectory: return "empty_trajectory";
    case ErrorCode::InvalidFps: return "invalid_fps";
    case ErrorCode::DegenerateBasis: return "degenerate_basis";
    case ErrorCode::DimMismatch: return "dim_mismatch";
    case ErrorCode::StaleMask: return "stale_mask";
    case ErrorCode::DegenerateShape: return "degenerate_shape";
    case ErrorCode::EmptySelection: return "empty_selection";
    case ErrorCode::EmptyHistory: return "empty_history";
    case ErrorCode::ZeroVector: return "zero_vector";
    case ErrorCode::ProviderFailure: return "provider_failure";
    case ErrorCode::SinkFailure: return "sink_failure";
    case ErrorCode::SpawnFailure: return "spawn_failure";
    case ErrorCode::EncoderExitNonzero: return "encoder_exit_nonzero";
    case ErrorCode::UnknownCommand: return "unknown_command";
    case ErrorCode::ValidationFailed: return "validation_failed";
    case ErrorCode::ExportBusy: return "export_busy";
    case ErrorCode::NotFound: return "not_found";
    case ErrorCode::InvalidArgument: return "invalid_argument";
  }
  return "unknown";
}

}  // namespace splat4d
