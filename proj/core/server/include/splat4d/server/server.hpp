#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <boost/beast/http.hpp>

#include "splat4d/session/registry.hpp"
#include "splat4d/session/scene_store.hpp"
#include "splat4d/session/session.hpp"

namespace splat4d::server {

struct ServerOptions {
  std::string address = "0.0.0.0";
  /// 0 binds an ephemeral port.
  std::uint16_t port = 8080;
  std::filesystem::path scenes_dir = "scenes";
  std::size_t io_threads = 2;
  std::uint64_t max_upload_bytes = 1ull << 30;
  double reconnect_grace_seconds = session::SessionRegistry::kDefaultGraceSeconds;
  /// Template for new sessions (render size, exports dir, provider).
  session::SessionOptions session;
};

/// State shared by all connections.
struct ServerContext {
  ServerContext(const ServerOptions& options);

  ServerOptions options;
  session::SceneStore store;
  session::SessionRegistry registry;

  /// Live WebSocket connections register a closer; the server runs them on stop.
  void track_connection(std::weak_ptr<void> owner, std::function<void()> close);
  void close_connections();

 private:
  std::mutex connections_mutex_;
  std::vector<std::pair<std::weak_ptr<void>, std::function<void()>>> connections_;
};

using HttpRequest = boost::beast::http::request<boost::beast::http::string_body>;
using HttpResponse = boost::beast::http::response<boost::beast::http::string_body>;

/// Plain HTTP endpoints: POST /scenes, GET /scenes, GET /scenes/{id}/manifest, GET /healthz.
HttpResponse route_request(const HttpRequest& request, ServerContext& ctx);

/// Splits "a=1&b=2" into pairs, percent-decoding values.
std::map<std::string, std::string> parse_query(std::string_view query);

/// HTTP + WebSocket server. WebSocket clients connect to /session?scene={id}[&session={token}].
class Server {
 public:
  explicit Server(ServerOptions options);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds, starts the I/O threads and returns the bound port.
  std::uint16_t start();
  /// Blocks until stop() is called from another thread or a signal handler.
  void wait();
  void stop();

  ServerContext& context();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Sets the global log level from LOG_LEVEL (trace, debug, info, warn, error, off).
void init_logging_from_env();

}  // namespace splat4d::server
