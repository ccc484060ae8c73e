#pragma once

#include <filesystem>
#include <vector>

#include "splat4d/manifest.hpp"
#include "splat4d/splat.hpp"

namespace splat4d {

struct LoadedSequence {
  SequenceManifest manifest;
  std::vector<CloudPtr> frames;  // one per manifest frame
};

/// Loads a single .ply (one-frame sequence), a manifest .json (frame files relative to it), or a
/// directory holding manifest.json or, failing that, its .ply files in name order.
/// Parse errors are rethrown with the offending file name prefixed to the message.
LoadedSequence load_sequence(const std::filesystem::path& path);

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);

}  // namespace splat4d
