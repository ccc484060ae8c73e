#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace splat4d {

struct ManifestFrame {
  std::string file;
  double t = 0.0;
};

/// Ordered frames of a 4D sequence. Timestamps strictly increase from 0 and duration >= last t.
struct SequenceManifest {
  double source_fps = 30.0;
  std::vector<ManifestFrame> frames;
  double duration = 0.0;

  std::size_t frame_count() const { return frames.size(); }
};

/// Parses the JSON manifest `{ "source_fps": 30, "frames": [{"file": .., "t": ..}], "duration": .. }`.
/// Missing timestamps get uniform spacing 1/source_fps; a missing duration becomes
/// last t + 1/source_fps. Throws Error(ParseError | NonMonotoneTimestamps | EmptySequence).
SequenceManifest load_manifest(std::string_view text);

/// Manifest with uniformly spaced frames, one per file, in the given order.
SequenceManifest uniform_manifest(std::vector<std::string> files, double source_fps = 30.0);

/// Re-validates an in-memory manifest; throws like load_manifest.
void validate_manifest(const SequenceManifest& manifest);

std::string manifest_to_json(const SequenceManifest& manifest);

}  // namespace splat4d
