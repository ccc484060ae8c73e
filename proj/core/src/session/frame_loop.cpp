#include "splat4d/session/frame_loop.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "splat4d/image.hpp"

namespace splat4d::session {

bool FrameChannel::push(std::vector<std::uint8_t> frame) {
  bool dropped = false;
  std::function<void()> listener;
  {
    std::lock_guard lock(mutex_);
    if (closed_) return false;
    ++pushed_;
    if (queued_) {
      ++dropped_;
      dropped = true;
    }
    queued_ = std::move(frame);
    max_in_flight_ = std::max<std::size_t>(max_in_flight_, (queued_ ? 1 : 0) + (sending_ ? 1 : 0));
    listener = listener_;
  }
  ready_.notify_one();
  if (listener) listener();
  return dropped;
}

void FrameChannel::set_listener(std::function<void()> listener) {
  std::lock_guard lock(mutex_);
  listener_ = std::move(listener);
}

std::optional<std::vector<std::uint8_t>> FrameChannel::take(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  ready_.wait_for(lock, timeout, [&] { return closed_ || (queued_ && !sending_); });
  if (closed_ || !queued_ || sending_) return std::nullopt;
  std::optional<std::vector<std::uint8_t>> out = std::move(queued_);
  queued_.reset();
  sending_ = true;
  return out;
}

void FrameChannel::release() {
  {
    std::lock_guard lock(mutex_);
    sending_ = false;
  }
  ready_.notify_one();
}

void FrameChannel::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
    queued_.reset();
  }
  ready_.notify_all();
}

bool FrameChannel::closed() const {
  std::lock_guard lock(mutex_);
  return closed_;
}

std::size_t FrameChannel::in_flight() const {
  std::lock_guard lock(mutex_);
  return (queued_ ? 1 : 0) + (sending_ ? 1 : 0);
}

std::size_t FrameChannel::max_in_flight() const {
  std::lock_guard lock(mutex_);
  return max_in_flight_;
}

std::uint64_t FrameChannel::pushed() const {
  std::lock_guard lock(mutex_);
  return pushed_;
}

std::uint64_t FrameChannel::dropped() const {
  std::lock_guard lock(mutex_);
  return dropped_;
}

FrameLoop::FrameLoop(std::shared_ptr<Session> session, FrameLoopOptions options)
    : session_(std::move(session)), options_(std::move(options)), format_(options_.format) {
  if (!session_) throw Error(ErrorCode::InvalidArgument, "frame loop needs a session");
}

FrameLoop::~FrameLoop() { drain_importance(); }

void FrameLoop::drain_importance() {
  if (importance_task_.valid()) importance_task_.wait();
}

double FrameLoop::next_due() const {
  if (!last_frame_) return 0.0;
  return std::min(next_time_, *last_frame_ + options_.keepalive_seconds);
}

std::optional<FrameMessage> FrameLoop::tick(double now) {
  if (last_tick_) session_->advance_playback(std::max(0.0, now - *last_tick_));
  last_tick_ = now;

  SessionSnapshot snap = session_->snapshot();
  const double interval = 1.0 / snap.playback.target_fps;
  bool due = false;
  if (!last_frame_) {
    due = true;
  } else if (snap.playback.playing || snap.revision != rendered_revision_) {
    due = now >= next_time_;
  } else {
    due = now - *last_frame_ >= options_.keepalive_seconds;
  }
  if (!due) return std::nullopt;

  // Frames sit on a fixed grid of period 1/target_fps; after a stall the grid restarts rather
  // than bursting to catch up.
  next_time_ = (!last_frame_ || now - next_time_ > interval) ? now + interval : next_time_ + interval;
  last_frame_ = now;
  rendered_revision_ = snap.revision;
  FrameMessage frame = render(snap);
  meter_.record(now);
  return frame;
}

FrameMessage FrameLoop::render(const SessionSnapshot& snap) {
  const RenderConfig& cfg = snap.render;
  Framebuffer fb;
  bool foveated = false;
  if (snap.foveation.enabled) {
    ImportanceMap map = snap.importance ? *snap.importance
                                        : heuristic_importance(previous_ ? &*previous_ : nullptr, cfg.tiles_y(), cfg.tiles_x());
    fb = render_foveated(*snap.cloud, snap.camera, map, cfg, snap.foveation, options_.pool);
    foveated = true;
  } else {
    fb = render_tiled(*snap.cloud, snap.camera, cfg, options_.pool);
  }

  const Image8 image = to_srgb8(fb);
  FrameMessage msg;
  msg.header.frame_seq = ++seq_;
  msg.header.width = static_cast<std::uint16_t>(cfg.width);
  msg.header.height = static_cast<std::uint16_t>(cfg.height);
  const FrameFormat format = format_.load();
  msg.header.format = format;
  msg.header.flags = foveated ? kFlagFoveated : 0;
  msg.header.sim_time_ms = static_cast<std::uint32_t>(std::llround(std::max(0.0, snap.playback.time) * 1000.0));
  msg.payload = format == FrameFormat::Png ? encode_png(image) : image.rgb;

  if (snap.foveation.enabled) refresh_importance(fb, snap);
  previous_ = std::move(fb);
  return msg;
}

void FrameLoop::refresh_importance(const Framebuffer& fb, const SessionSnapshot& snap) {
  const int rows = snap.render.tiles_y();
  const int cols = snap.render.tiles_x();
  auto provider = session_->provider();
  if (!provider) {
    session_->update_importance(heuristic_importance(&fb, rows, cols));
    return;
  }
  // The render loop never waits on the provider: a query starts only when the previous one has
  // finished, and its result lands in the session's smoothed map whenever it arrives.
  if (importance_task_.valid() && importance_task_.wait_for(std::chrono::seconds(0)) != std::future_status::ready) {
    return;
  }
  auto png = std::make_shared<std::vector<std::uint8_t>>(encode_png(to_srgb8(fb)));
  auto frame = std::make_shared<Framebuffer>(fb);
  importance_task_ = std::async(std::launch::async, [session = session_, provider, png, frame, prompt = snap.prompt, rows,
                                                     cols, diag = options_.on_diagnostic] {
    ImportanceResult r = query_provider(*png, prompt, provider.get(), rows, cols, frame.get(), diag);
    session->update_importance(r.map);
  });
}

nlohmann::json FrameLoop::stats_event(double now) const {
  nlohmann::json ev{{"type", "stats"}, {"fps", meter_.fps(now)}, {"frame_seq", seq_}};
  const SessionSnapshot snap = session_->snapshot();
  if (snap.importance) {
    ev["importance"] = {{"rows", snap.importance->rows()},
                        {"cols", snap.importance->cols()},
                        {"values", std::vector<float>(snap.importance->values().begin(), snap.importance->values().end())}};
  }
  ev["threshold"] = snap.foveation.threshold;
  return ev;
}

double monotonic_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

void run_frame_loop(FrameLoop& loop, FrameChannel& channel, const std::atomic<bool>& stop,
                    const std::function<void(const nlohmann::json&)>& on_stats) {
  double last_stats = monotonic_seconds();
  while (!stop.load() && !channel.closed()) {
    const double now = monotonic_seconds();
    if (auto frame = loop.tick(now)) channel.push(encode_frame(*frame));
    if (on_stats && now - last_stats >= 1.0) {
      on_stats(loop.stats_event(now));
      last_stats = now;
    }
    // Sleep until the next frame is due, but wake regularly so commands are picked up promptly.
    const double wait = std::clamp(loop.next_due() - monotonic_seconds(), 0.0, 0.005);
    if (wait > 0.0) std::this_thread::sleep_for(std::chrono::duration<double>(wait));
  }
}

}  // namespace splat4d::session
