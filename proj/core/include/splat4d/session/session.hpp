#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "splat4d/camera.hpp"
#include "splat4d/foveation.hpp"
#include "splat4d/rasterizer.hpp"
#include "splat4d/selection.hpp"
#include "splat4d/sequence_player.hpp"
#include "splat4d/session/protocol.hpp"
#include "splat4d/session/scene_store.hpp"

namespace splat4d::session {

using EventSink = std::function<void(const nlohmann::json&)>;
using SceneResolver = std::function<ScenePtr(const std::string& scene_id)>;

struct SessionOptions {
  RenderConfig render{};
  FoveationConfig foveation{};
  /// Export artifacts go to `<exports_dir>/<session id>/job_<n>`.
  std::filesystem::path exports_dir = "exports";
  /// Needed by LoadScene; without it LoadScene fails with not_found.
  SceneResolver resolve_scene;
  /// Shared by live importance updates and exports; may be null.
  std::shared_ptr<ImportanceProvider> provider;
  std::size_t export_progress_every = 10;
};

/// Consistent copy of the state one frame needs.
struct SessionSnapshot {
  std::string scene_id;
  CameraPose camera;
  PlaybackState playback;
  std::size_t frame_index = 0;
  CloudPtr cloud;
  RenderConfig render;
  FoveationConfig foveation;
  std::string prompt;
  std::optional<ImportanceMap> importance;
  std::size_t selection_count = 0;
  /// Bumps on every state-changing command.
  std::uint64_t revision = 0;
};

/// Camera framing the bounds of a cloud from +z.
CameraPose default_camera(const SplatCloud& cloud);

/// Per-client interactive state. Commands are applied one at a time under a lock, so the state
/// always equals the in-order application of the commands received so far.
class Session {
 public:
  Session(std::string id, ScenePtr scene, SessionOptions options);
  ~Session();

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const std::string& id() const { return id_; }

  /// Applies one command and returns exactly one ack or error event.
  nlohmann::json handle(const nlohmann::json& command);
  /// Same for raw text; malformed JSON yields an error with a null seq.
  nlohmann::json handle_text(std::string_view text);

  /// Receives asynchronous events (export progress, diagnostics). Called from worker threads.
  void set_event_sink(EventSink sink);

  SessionSnapshot snapshot() const;
  /// Moves playback forward by measured wall time.
  void advance_playback(double wall_dt);
  /// Changes the render resolution (negotiated by the transport at connect time).
  /// Throws Error(InvalidArgument).
  void set_resolution(int width, int height);
  /// Folds a fresh importance map into the smoothed one (or replaces it when dims changed).
  void update_importance(const ImportanceMap& map);

  std::shared_ptr<ImportanceProvider> provider() const { return options_.provider; }
  bool export_running() const { return export_running_.load(); }
  /// Blocks until the current export (if any) has finished.
  void wait_for_export();

  /// Summary echoed in acks: time, playing, frame, selection count, etc.
  nlohmann::json state_summary() const;

 private:
  using Handler = void (Session::*)(const nlohmann::json&, nlohmann::json&);

  void emit(const nlohmann::json& event);
  nlohmann::json state_summary_locked() const;
  void reset_scene_locked(ScenePtr scene);
  std::size_t current_frame_locked() const;

  void cmd_load_scene(const nlohmann::json& msg, nlohmann::json& reply);
  void cmd_set_camera(const nlohmann::json& msg, nlohmann::json& reply);
  void cmd_seek(const nlohmann::json& msg, nlohmann::json& reply);
  void cmd_play(const nlohmann::json& msg, nlohmann::json& reply);
  void cmd_pause(const nlohmann::json& msg, nlohmann::json& reply);
  void cmd_set_speed(const nlohmann::json& msg, nlohmann::json& reply);
  void cmd_set_fps(const nlohmann::json& msg, nlohmann::json& reply);
  void cmd_set_loop(const nlohmann::json& msg, nlohmann::json& reply);
  void cmd_select(const nlohmann::json& msg, nlohmann::json& reply);
  void cmd_edit(const nlohmann::json& msg, nlohmann::json& reply);
  void cmd_undo(const nlohmann::json& msg, nlohmann::json& reply);
  void cmd_set_foveation(const nlohmann::json& msg, nlohmann::json& reply);
  void cmd_set_prompt(const nlohmann::json& msg, nlohmann::json& reply);
  void cmd_start_export(const nlohmann::json& msg, nlohmann::json& reply);
  void cmd_ping(const nlohmann::json& msg, nlohmann::json& reply);

  std::string id_;
  SessionOptions options_;

  mutable std::mutex mutex_;
  ScenePtr scene_;
  /// Current clouds per scene frame; edits replace entries copy-on-write.
  std::vector<CloudPtr> frames_;
  std::map<std::size_t, EditHistory> histories_;
  CameraPose camera_;
  PlaybackState playback_;
  SelectionMask selection_;
  std::size_t selection_frame_ = 0;
  RenderConfig render_;
  FoveationConfig foveation_;
  std::string prompt_;
  std::optional<ImportanceMap> importance_;
  std::uint64_t revision_ = 0;

  std::mutex sink_mutex_;
  EventSink sink_;

  std::mutex export_mutex_;
  std::thread export_thread_;
  std::atomic<bool> export_running_{false};
  std::atomic<bool> closing_{false};
  std::uint64_t next_job_ = 1;
};

}  // namespace splat4d::session
