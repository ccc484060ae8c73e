#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "splat4d/session/scene_store.hpp"
#include "splat4d/session/session.hpp"

namespace splat4d::session {

/// Live sessions keyed by their token. A detached session survives for the grace period so a
/// reconnecting client resumes with the same camera, time and selection.
class SessionRegistry {
 public:
  static constexpr double kDefaultGraceSeconds = 60.0;

  SessionRegistry(SceneStore& store, SessionOptions defaults, double grace_seconds = kDefaultGraceSeconds);

  struct Attachment {
    std::shared_ptr<Session> session;
    bool resumed = false;
  };

  /// Resumes `token` when it names a live session, otherwise opens a new session on `scene_id`.
  /// Throws Error(NotFound) for an unknown scene.
  Attachment attach(const std::string& scene_id, const std::optional<std::string>& token, double now);
  /// Starts the grace period once the last connection of a session has ended.
  void detach(const std::string& token, double now);
  /// Drops sessions detached for longer than the grace period.
  std::size_t reap(double now);
  std::size_t size() const;
  double grace_seconds() const { return grace_; }

 private:
  struct Entry {
    std::shared_ptr<Session> session;
    int connections = 0;
    std::optional<double> detached_at;
  };

  SceneStore& store_;
  SessionOptions defaults_;
  double grace_;
  mutable std::mutex mutex_;
  std::map<std::string, Entry> sessions_;
};

/// 128-bit random hex token.
std::string random_token();

}  // namespace splat4d::session
