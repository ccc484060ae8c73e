#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>

#include <nlohmann/json.hpp>

#include "splat4d/metrics.hpp"
#include "splat4d/session/protocol.hpp"
#include "splat4d/session/session.hpp"
#include "splat4d/thread_pool.hpp"

namespace splat4d::session {

/// Per-connection outbound frame slot. At most one frame is queued and one is being sent; a new
/// frame replaces the queued one (latest wins), so the backlog never exceeds two frames.
class FrameChannel {
 public:
  static constexpr std::size_t kMaxInFlight = 2;

  /// Returns true when an older queued frame was dropped.
  bool push(std::vector<std::uint8_t> frame);
  /// Takes the queued frame for sending; empty if none is queued, a send is already in
  /// progress, or the channel is closed. Blocks up to `timeout` for a frame.
  std::optional<std::vector<std::uint8_t>> take(std::chrono::milliseconds timeout = std::chrono::milliseconds(0));
  /// Marks the frame returned by take() as delivered.
  void release();
  void close();
  bool closed() const;
  /// Called (outside the lock) after every push, e.g. to wake a writer.
  void set_listener(std::function<void()> listener);

  std::size_t in_flight() const;
  std::size_t max_in_flight() const;
  std::uint64_t pushed() const;
  std::uint64_t dropped() const;

 private:
  mutable std::mutex mutex_;
  std::condition_variable ready_;
  std::optional<std::vector<std::uint8_t>> queued_;
  bool sending_ = false;
  bool closed_ = false;
  std::size_t max_in_flight_ = 0;
  std::uint64_t pushed_ = 0;
  std::uint64_t dropped_ = 0;
  std::function<void()> listener_;
};

struct FrameLoopOptions {
  FrameFormat format = FrameFormat::Png;
  /// Refresh period while paused with no state change.
  double keepalive_seconds = 1.0;
  /// Null renders on the calling thread only.
  ThreadPool* pool = nullptr;
  DiagnosticSink on_diagnostic;
};

/// Decides when a session needs a new frame and produces it. tick() takes the current time so
/// tests can drive the loop with a simulated clock.
class FrameLoop {
 public:
  FrameLoop(std::shared_ptr<Session> session, FrameLoopOptions options = {});
  ~FrameLoop();

  FrameLoop(const FrameLoop&) = delete;
  FrameLoop& operator=(const FrameLoop&) = delete;

  /// Advances playback by the time since the previous tick and renders a frame if one is due:
  /// at most target_fps while playing or after a state change, else one keepalive per period.
  std::optional<FrameMessage> tick(double now);

  /// Earliest time at which tick() might produce a frame.
  double next_due() const;

  /// Format for subsequent frames (negotiated by the client's hello).
  void set_format(FrameFormat format) { format_.store(format); }
  FrameFormat format() const { return format_.load(); }

  std::uint32_t frames_produced() const { return seq_; }
  const FpsMeter& meter() const { return meter_; }
  /// Current fps, frame counter and importance map as a "stats" event.
  nlohmann::json stats_event(double now) const;

  /// Waits for an in-flight provider query to finish (tests and shutdown).
  void drain_importance();

 private:
  FrameMessage render(const SessionSnapshot& snap);
  void refresh_importance(const Framebuffer& fb, const SessionSnapshot& snap);

  std::shared_ptr<Session> session_;
  FrameLoopOptions options_;
  std::atomic<FrameFormat> format_;
  std::optional<double> last_tick_;
  std::optional<double> last_frame_;
  double next_time_ = 0.0;
  std::uint64_t rendered_revision_ = 0;
  std::uint32_t seq_ = 0;
  FpsMeter meter_;
  std::optional<Framebuffer> previous_;
  std::future<void> importance_task_;
};

/// Drives `loop` in real time and pushes encoded frames into `channel` until `stop` is set.
/// `on_stats` (optional) receives a stats event about once per second.
void run_frame_loop(FrameLoop& loop, FrameChannel& channel, const std::atomic<bool>& stop,
                    const std::function<void(const nlohmann::json&)>& on_stats = {});

/// Monotonic seconds since an arbitrary epoch.
double monotonic_seconds();

}  // namespace splat4d::session
