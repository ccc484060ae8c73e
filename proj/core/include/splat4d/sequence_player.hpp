#pragma once

#include <cstddef>
#include <list>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <vector>

#include "splat4d/manifest.hpp"
#include "splat4d/splat.hpp"

namespace splat4d {

struct PlaybackState {
  double time = 0.0;
  bool playing = false;
  double speed = 1.0;
  bool loop = true;
  double target_fps = 60.0;

  bool operator==(const PlaybackState&) const = default;
};

/// Index of the last frame whose timestamp is <= time. Throws Error(EmptySequence).
std::size_t frame_at(const SequenceManifest& manifest, double time);

/// Moves playback forward by wall_dt * speed, wrapping when looping, otherwise clamping at the
/// end and pausing. A paused state is returned unchanged.
PlaybackState advance(const PlaybackState& state, const SequenceManifest& manifest, double wall_dt);

/// Clamps t into [0, duration], or wraps it modulo duration when looping and t > duration.
PlaybackState seek(const PlaybackState& state, const SequenceManifest& manifest, double t);

/// LRU cache of loaded frames. Thread-safe; entries are published whole.
class FrameCache {
 public:
  explicit FrameCache(std::size_t capacity = 8, std::size_t prefetch_window = 3);

  std::size_t capacity() const { return capacity_; }
  std::size_t prefetch_window() const { return prefetch_window_; }
  std::size_t size() const;
  bool contains(std::size_t frame) const;

  /// Looks up a frame and marks it most recently used.
  CloudPtr get(std::size_t frame);
  /// Inserts or replaces a frame, evicting the least recently used entry that is not pinned.
  void put(std::size_t frame, CloudPtr cloud);
  /// The pinned frame (the one on screen) is never evicted.
  void pin(std::optional<std::size_t> frame);
  std::vector<std::size_t> keys() const;

 private:
  void evict_locked();

  std::size_t capacity_;
  std::size_t prefetch_window_;
  mutable std::mutex mutex_;
  std::list<std::size_t> lru_;  // front = most recent
  std::unordered_map<std::size_t, std::pair<CloudPtr, std::list<std::size_t>::iterator>> entries_;
  std::optional<std::size_t> pinned_;
};

/// Up to prefetch_window frames after the current one (wrapping when looping), nearest first,
/// skipping frames already cached.
std::vector<std::size_t> prefetch_plan(const PlaybackState& state, const SequenceManifest& manifest,
                                       const FrameCache& cache);

}  // namespace splat4d
