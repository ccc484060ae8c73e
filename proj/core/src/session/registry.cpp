#include "splat4d/session/registry.hpp"

#include <random>

namespace splat4d::session {

std::string random_token() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (int word = 0; word < 2; ++word) {
    std::uint64_t v = rng();
    for (int i = 0; i < 16; ++i, v >>= 4) out.push_back(kHex[v & 0xF]);
  }
  return out;
}

SessionRegistry::SessionRegistry(SceneStore& store, SessionOptions defaults, double grace_seconds)
    : store_(store), defaults_(std::move(defaults)), grace_(grace_seconds) {
  if (!defaults_.resolve_scene) defaults_.resolve_scene = [this](const std::string& id) { return store_.get(id); };
}

SessionRegistry::Attachment SessionRegistry::attach(const std::string& scene_id, const std::optional<std::string>& token,
                                                    double now) {
  reap(now);
  {
    std::lock_guard lock(mutex_);
    if (token) {
      if (auto it = sessions_.find(*token); it != sessions_.end()) {
        it->second.detached_at.reset();
        ++it->second.connections;
        return {it->second.session, true};
      }
    }
  }
  ScenePtr scene = store_.get(scene_id);
  const std::string id = random_token();
  auto session = std::make_shared<Session>(id, std::move(scene), defaults_);
  std::lock_guard lock(mutex_);
  sessions_.emplace(id, Entry{session, 1, std::nullopt});
  return {session, false};
}

void SessionRegistry::detach(const std::string& token, double now) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(token);
  if (it == sessions_.end()) return;
  if (--it->second.connections <= 0) {
    it->second.connections = 0;
    it->second.detached_at = now;
  }
}

std::size_t SessionRegistry::reap(double now) {
  std::vector<std::shared_ptr<Session>> expired;
  {
    std::lock_guard lock(mutex_);
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      if (it->second.detached_at && now - *it->second.detached_at > grace_) {
        expired.push_back(std::move(it->second.session));
        it = sessions_.erase(it);
      } else {
        ++it;
      }
    }
  }
  // Destroyed outside the lock: a session joins its export worker on destruction.
  return expired.size();
}

std::size_t SessionRegistry::size() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

}  // namespace splat4d::session
