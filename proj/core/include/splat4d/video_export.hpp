#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "splat4d/foveation.hpp"
#include "splat4d/manifest.hpp"
#include "splat4d/trajectory.hpp"

namespace splat4d {

/// Receives frames of one export in strictly increasing, gap-free index order.
class EncoderSink {
 public:
  virtual ~EncoderSink() = default;
  /// Called once before the first frame.
  virtual void begin(int width, int height, double fps) = 0;
  virtual void accept(std::size_t index, int width, int height, std::span<const std::uint8_t> rgb8) = 0;
  /// Returns a reference to the produced artifact (directory or container path).
  virtual std::string finalize() = 0;
};

/// Writes frame_000000.png ... plus sidecar.json `{ "fps", "frames" }` into a directory.
std::unique_ptr<EncoderSink> image_sequence_sink(std::filesystem::path directory);

/// Zero-padded PNG file name for a frame index.
std::string frame_file_name(std::size_t index);

/// Streams raw RGB24 frames to a child process's stdin. The template is split on whitespace and
/// {width}, {height}, {fps} and {output} are substituted in each argument. begin() throws
/// Error(SpawnFailure) when the program cannot be executed; finalize() throws
/// Error(EncoderExitNonzero) carrying the exit status.
std::unique_ptr<EncoderSink> external_encoder_sink(std::string command_template, std::filesystem::path output);

/// Loads scene frames by manifest index. Must be safe to call repeatedly for the same index.
using FrameLoader = std::function<CloudPtr(std::size_t frame_index)>;

struct ExportJob {
  Trajectory trajectory;
  SequenceManifest manifest;
  FrameLoader load_frame;
  RenderConfig render;
  double fps = 30.0;
  FoveationConfig foveation{};
  float smoothing_alpha = 0.8f;
  std::string prompt;
  /// Optional importance provider; null uses the heuristic only.
  ImportanceProvider* provider = nullptr;
  EncoderSink* sink = nullptr;
  ThreadPool* pool = nullptr;
  /// Called after each delivered frame with (frames_done, frames_total).
  std::function<void(std::size_t, std::size_t)> on_progress;
  DiagnosticSink on_diagnostic;
};

struct ExportResult {
  std::size_t frame_count = 0;
  std::string output;
};

/// EMA over poses: position and vfov/near/far lerp, orientation slerps toward each new input.
std::vector<CameraPose> smooth_poses(std::span<const CameraPose> poses, float alpha);

/// Renders the trajectory over the sequence and feeds the sink. Throws Error(EmptyTrajectory),
/// Error(InvalidFps), or Error(SinkFailure) (sink errors propagate and abort the export).
ExportResult run_export(const ExportJob& job);

/// Maps a trajectory time to sequence time: offset from the trajectory start, clamped to
/// [0, duration].
double sequence_time_for(const Trajectory& traj, const SequenceManifest& manifest, double trajectory_time);

}  // namespace splat4d
