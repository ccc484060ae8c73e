#include "splat4d/sequence_player.hpp"

#include <algorithm>
#include <cmath>

#include "splat4d/error.hpp"

namespace splat4d {

std::size_t frame_at(const SequenceManifest& manifest, double time) {
  const auto& frames = manifest.frames;
  if (frames.empty()) throw Error(ErrorCode::EmptySequence, "sequence has no frames");
  const auto it = std::upper_bound(frames.begin(), frames.end(), time,
                                   [](double t, const ManifestFrame& f) { return t < f.t; });
  if (it == frames.begin()) return 0;
  return static_cast<std::size_t>(it - frames.begin()) - 1;
}

PlaybackState advance(const PlaybackState& state, const SequenceManifest& manifest, double wall_dt) {
  if (!state.playing || wall_dt <= 0.0) return state;
  PlaybackState next = state;
  const double duration = manifest.duration;
  double t = state.time + wall_dt * state.speed;
  if (state.loop) {
    if (t >= duration) t = duration > 0.0 ? std::fmod(t, duration) : 0.0;
  } else if (t >= duration) {
    t = duration;
    next.playing = false;
  }
  next.time = std::clamp(t, 0.0, duration);
  return next;
}

PlaybackState seek(const PlaybackState& state, const SequenceManifest& manifest, double t) {
  PlaybackState next = state;
  const double duration = manifest.duration;
  if (!std::isfinite(t)) return next;
  if (state.loop && t > duration && duration > 0.0) {
    next.time = std::fmod(t, duration);
  } else {
    next.time = std::clamp(t, 0.0, duration);
  }
  return next;
}

FrameCache::FrameCache(std::size_t capacity, std::size_t prefetch_window)
    : capacity_(std::max<std::size_t>(1, capacity)), prefetch_window_(prefetch_window) {}

std::size_t FrameCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

bool FrameCache::contains(std::size_t frame) const {
  std::lock_guard lock(mutex_);
  return entries_.contains(frame);
}

CloudPtr FrameCache::get(std::size_t frame) {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(frame);
  if (it == entries_.end()) return nullptr;
  lru_.splice(lru_.begin(), lru_, it->second.second);
  return it->second.first;
}

void FrameCache::put(std::size_t frame, CloudPtr cloud) {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(frame);
  if (it != entries_.end()) {
    it->second.first = std::move(cloud);
    lru_.splice(lru_.begin(), lru_, it->second.second);
    return;
  }
  lru_.push_front(frame);
  entries_.emplace(frame, std::make_pair(std::move(cloud), lru_.begin()));
  evict_locked();
}

void FrameCache::pin(std::optional<std::size_t> frame) {
  std::lock_guard lock(mutex_);
  pinned_ = frame;
}

std::vector<std::size_t> FrameCache::keys() const {
  std::lock_guard lock(mutex_);
  return {lru_.begin(), lru_.end()};
}

void FrameCache::evict_locked() {
  while (entries_.size() > capacity_) {
    auto victim = std::prev(lru_.end());
    if (pinned_ && *victim == *pinned_) {
      if (lru_.size() == 1) return;
      victim = std::prev(victim);
    }
    entries_.erase(*victim);
    lru_.erase(victim);
  }
}

std::vector<std::size_t> prefetch_plan(const PlaybackState& state, const SequenceManifest& manifest, const FrameCache& cache) {
  const std::size_t n = manifest.frames.size();
  std::vector<std::size_t> plan;
  if (n == 0) return plan;
  const std::size_t current = frame_at(manifest, state.time);
  for (std::size_t d = 1; d <= cache.prefetch_window(); ++d) {
    std::size_t idx = current + d;
    if (idx >= n) {
      if (!state.loop) break;
      idx %= n;
    }
    if (idx == current || cache.contains(idx)) continue;
    if (std::find(plan.begin(), plan.end(), idx) != plan.end()) continue;
    plan.push_back(idx);
  }
  return plan;
}

}  // namespace splat4d
