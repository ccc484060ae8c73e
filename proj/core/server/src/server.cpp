#include "splat4d/server/server.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <thread>

#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "splat4d/session/frame_loop.hpp"
#include "splat4d/thread_pool.hpp"

namespace splat4d::server {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;

ServerContext::ServerContext(const ServerOptions& opts)
    : options(opts), store(opts.scenes_dir), registry(store, opts.session, opts.reconnect_grace_seconds) {}

void ServerContext::track_connection(std::weak_ptr<void> owner, std::function<void()> close) {
  std::lock_guard lock(connections_mutex_);
  std::erase_if(connections_, [](const auto& c) { return c.first.expired(); });
  connections_.emplace_back(std::move(owner), std::move(close));
}

void ServerContext::close_connections() {
  std::vector<std::pair<std::weak_ptr<void>, std::function<void()>>> live;
  {
    std::lock_guard lock(connections_mutex_);
    live.swap(connections_);
  }
  for (auto& [owner, close] : live) {
    if (auto keep = owner.lock()) close();
  }
}

namespace {

// One WebSocket client bound to one session. Writes are serialized on the socket's strand:
// queued JSON events go first, then the latest frame from the channel.
class WsConnection : public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(tcp::socket&& socket, ServerContext& ctx, session::SessionRegistry::Attachment attachment)
      : ws_(std::move(socket)),
        executor_(ws_.get_executor()),
        ctx_(ctx),
        session_(std::move(attachment.session)),
        resumed_(attachment.resumed) {}

  ~WsConnection() { stop_frames(); }

  void start(HttpRequest req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, beast::bind_front_handler(&WsConnection::on_accept, shared_from_this()));
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) {
      spdlog::warn("websocket handshake failed: {}", ec.message());
      ctx_.registry.detach(session_->id(), session::monotonic_seconds());
      return;
    }
    std::weak_ptr<WsConnection> weak = weak_from_this();
    ctx_.track_connection(weak, [weak] {
      if (auto self = weak.lock()) self->force_close();
    });
    // Callbacks from other threads only post; they never hold a strong reference themselves.
    auto post_text = [weak, exec = executor_](std::string text) {
      net::post(exec, [weak, text = std::move(text)]() mutable {
        if (auto self = weak.lock()) self->queue_text(std::move(text));
      });
    };
    session_->set_event_sink([post_text](const json& ev) { post_text(ev.dump()); });
    channel_.set_listener([weak, exec = executor_] {
      net::post(exec, [weak] {
        if (auto self = weak.lock()) self->do_write();
      });
    });

    json hello{{"type", "hello"}, {"session", session_->id()}, {"resumed", resumed_},
               {"formats", {"png", "raw"}}, {"state", session_->state_summary()}};
    queue_text(hello.dump());

    session::FrameLoopOptions opts;
    opts.pool = &default_thread_pool();
    opts.on_diagnostic = [post_text](const std::string& m) { post_text(session::events::diagnostic(m).dump()); };
    loop_ = std::make_unique<session::FrameLoop>(session_, opts);
    frame_thread_ = std::thread([this, post_text] {
      session::run_frame_loop(*loop_, channel_, stop_, [post_text](const json& ev) { post_text(ev.dump()); });
    });
    spdlog::info("session {} {} (scene {})", session_->id(), resumed_ ? "resumed" : "opened",
                 session_->snapshot().scene_id);
    do_read();
  }

  void do_read() { ws_.async_read(buffer_, beast::bind_front_handler(&WsConnection::on_read, shared_from_this())); }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      shutdown();
      return;
    }
    const bool text = ws_.got_text();
    std::string message = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    if (!text) {
      queue_text(session::events::error(std::nullopt, session::validation_failed("binary_not_accepted")).dump());
    } else {
      queue_text(handle(message).dump());
    }
    do_read();
  }

  json handle(const std::string& text) {
    json msg = json::parse(text, nullptr, false);
    if (msg.is_object() && msg.value("type", std::string()) == "hello") return handle_hello(msg);
    if (msg.is_discarded()) return session_->handle_text(text);
    return session_->handle(msg);
  }

  // Transport-level handshake: frame format and render size.
  json handle_hello(const json& msg) {
    std::optional<std::int64_t> seq;
    if (msg.contains("seq") && msg["seq"].is_number_integer()) seq = msg["seq"].get<std::int64_t>();
    const std::string format = msg.value("format", std::string("png"));
    if (format != "png" && format != "raw") return session::events::error(seq, session::validation_failed("unsupported_format"));
    if (msg.contains("width") || msg.contains("height")) {
      try {
        const auto snap = session_->snapshot();
        session_->set_resolution(msg.value("width", snap.render.width), msg.value("height", snap.render.height));
      } catch (const Error& e) {
        return session::events::error(seq, session::validation_failed("invalid_resolution", e.what()));
      } catch (const json::exception& e) {
        return session::events::error(seq, session::validation_failed("invalid_resolution", e.what()));
      }
    }
    loop_->set_format(format == "raw" ? session::FrameFormat::RawRgb8 : session::FrameFormat::Png);
    json ack = session::events::ack(seq.value_or(0), session_->state_summary());
    ack["format"] = format;
    return ack;
  }

  void queue_text(std::string text) {
    if (closed_) return;
    texts_.push_back(std::move(text));
    do_write();
  }

  void do_write() {
    if (writing_ || closed_) return;
    if (!texts_.empty()) {
      writing_ = true;
      ws_.text(true);
      ws_.async_write(net::buffer(texts_.front()), beast::bind_front_handler(&WsConnection::on_text_written, shared_from_this()));
      return;
    }
    if (auto frame = channel_.take()) {
      writing_ = true;
      current_frame_ = std::move(*frame);
      ws_.binary(true);
      ws_.async_write(net::buffer(current_frame_), beast::bind_front_handler(&WsConnection::on_frame_written, shared_from_this()));
    }
  }

  void on_text_written(beast::error_code ec, std::size_t) {
    writing_ = false;
    texts_.pop_front();
    if (ec) return shutdown();
    do_write();
  }

  void on_frame_written(beast::error_code ec, std::size_t) {
    writing_ = false;
    channel_.release();
    if (ec) return shutdown();
    do_write();
  }

  // Only called once the I/O threads have stopped.
  void force_close() {
    shutdown();
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().shutdown(tcp::socket::shutdown_both, ec);
    beast::get_lowest_layer(ws_).socket().close(ec);
  }

  void stop_frames() {
    stop_ = true;
    channel_.close();
    if (frame_thread_.joinable()) frame_thread_.join();
  }

  void shutdown() {
    if (closed_) return;
    closed_ = true;
    texts_.clear();
    session_->set_event_sink(nullptr);
    stop_frames();
    ctx_.registry.detach(session_->id(), session::monotonic_seconds());
    spdlog::info("session {} disconnected", session_->id());
  }

  websocket::stream<beast::tcp_stream> ws_;
  net::any_io_executor executor_;
  ServerContext& ctx_;
  std::shared_ptr<session::Session> session_;
  bool resumed_ = false;
  beast::flat_buffer buffer_;
  std::deque<std::string> texts_;
  std::vector<std::uint8_t> current_frame_;
  bool writing_ = false;
  bool closed_ = false;
  session::FrameChannel channel_;
  std::unique_ptr<session::FrameLoop> loop_;
  std::atomic<bool> stop_{false};
  std::thread frame_thread_;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket&& socket, ServerContext& ctx) : stream_(std::move(socket)), ctx_(ctx) {}

  void run() { net::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpConnection::do_read, shared_from_this())); }

 private:
  void do_read() {
    parser_.emplace();
    parser_->body_limit(ctx_.options.max_upload_bytes);
    stream_.expires_after(std::chrono::seconds(60));
    http::async_read(stream_, buffer_, *parser_, beast::bind_front_handler(&HttpConnection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec == http::error::end_of_stream) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    if (ec) return;
    HttpRequest req = parser_->release();

    if (websocket::is_upgrade(req)) {
      upgrade(std::move(req));
      return;
    }
    HttpResponse res;
    try {
      res = route_request(req, ctx_);
    } catch (const std::exception& e) {
      spdlog::error("request {} failed: {}", std::string(req.target()), e.what());
      res = HttpResponse{http::status::internal_server_error, req.version()};
      res.set(http::field::content_type, "application/json");
      res.body() = json{{"error", "internal"}, {"message", e.what()}}.dump();
      res.prepare_payload();
    }
    spdlog::debug("{} {} -> {}", std::string(req.method_string()), std::string(req.target()), res.result_int());
    write(std::move(res));
  }

  void upgrade(HttpRequest req) {
    const std::string_view target(req.target().data(), req.target().size());
    const std::size_t q = target.find('?');
    const std::string_view path = target.substr(0, q);
    const auto query = parse_query(q == std::string_view::npos ? std::string_view{} : target.substr(q + 1));
    if (path != "/session") return reject(req, http::status::not_found, "not_found", "websocket endpoint is /session");
    auto scene = query.find("scene");
    std::optional<std::string> token;
    if (auto it = query.find("session"); it != query.end() && !it->second.empty()) token = it->second;
    if ((scene == query.end() || scene->second.empty()) && !token) {
      return reject(req, http::status::bad_request, "missing_scene", "query needs scene={id}");
    }
    try {
      auto attachment = ctx_.registry.attach(scene == query.end() ? std::string() : scene->second, token,
                                             session::monotonic_seconds());
      stream_.expires_never();
      std::make_shared<WsConnection>(stream_.release_socket(), ctx_, std::move(attachment))->start(std::move(req));
    } catch (const Error& e) {
      reject(req, e.code() == ErrorCode::NotFound ? http::status::not_found : http::status::bad_request,
             std::string(to_string(e.code())), e.what());
    }
  }

  void reject(const HttpRequest& req, http::status status, const std::string& code, const std::string& message) {
    HttpResponse res{status, req.version()};
    res.set(http::field::content_type, "application/json");
    res.keep_alive(false);
    res.body() = json{{"error", code}, {"message", message}}.dump();
    res.prepare_payload();
    write(std::move(res));
  }

  void write(HttpResponse res) {
    auto sp = std::make_shared<HttpResponse>(std::move(res));
    http::async_write(stream_, *sp, [self = shared_from_this(), sp](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (sp->need_eof()) {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        return;
      }
      self->do_read();
    });
  }

  beast::tcp_stream stream_;
  ServerContext& ctx_;
  beast::flat_buffer buffer_;
  std::optional<http::request_parser<http::string_body>> parser_;
};

}  // namespace

struct Server::Impl {
  explicit Impl(ServerOptions opts) : ctx(opts), acceptor(net::make_strand(ioc)), reaper(ioc) {}

  // Declared first so it outlives the io_context and every connection it owns.
  ServerContext ctx;
  net::io_context ioc;
  tcp::acceptor acceptor;
  net::steady_timer reaper;
  std::vector<std::thread> threads;
  std::mutex mutex;
  std::condition_variable stopped_cv;
  bool stopped = false;

  void do_accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (ec != net::error::operation_aborted) spdlog::warn("accept failed: {}", ec.message());
      } else {
        std::make_shared<HttpConnection>(std::move(socket), ctx)->run();
      }
      if (acceptor.is_open()) do_accept();
    });
  }

  void schedule_reap() {
    reaper.expires_after(std::chrono::seconds(5));
    reaper.async_wait([this](beast::error_code ec) {
      if (ec) return;
      const std::size_t n = ctx.registry.reap(session::monotonic_seconds());
      if (n > 0) spdlog::info("expired {} detached session(s)", n);
      schedule_reap();
    });
  }
};

Server::Server(ServerOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

Server::~Server() {
  stop();
  // Pending handlers (and the connections they own) go away with the io_context.
}

ServerContext& Server::context() { return impl_->ctx; }

std::uint16_t Server::start() {
  const auto& opts = impl_->ctx.options;
  const tcp::endpoint endpoint{net::ip::make_address(opts.address), opts.port};
  impl_->acceptor.open(endpoint.protocol());
  impl_->acceptor.set_option(net::socket_base::reuse_address(true));
  impl_->acceptor.bind(endpoint);
  impl_->acceptor.listen(net::socket_base::max_listen_connections);
  const std::uint16_t port = impl_->acceptor.local_endpoint().port();
  impl_->do_accept();
  impl_->schedule_reap();
  const std::size_t n = std::max<std::size_t>(1, opts.io_threads);
  for (std::size_t i = 0; i < n; ++i) impl_->threads.emplace_back([this] { impl_->ioc.run(); });
  spdlog::info("listening on {}:{} (scenes in {})", opts.address, port, opts.scenes_dir.string());
  return port;
}

void Server::wait() {
  std::unique_lock lock(impl_->mutex);
  impl_->stopped_cv.wait(lock, [&] { return impl_->stopped; });
}

void Server::stop() {
  {
    std::lock_guard lock(impl_->mutex);
    if (impl_->stopped) return;
    impl_->stopped = true;
  }
  net::post(impl_->acceptor.get_executor(), [this] {
    beast::error_code ec;
    impl_->acceptor.close(ec);
    impl_->reaper.cancel();
  });
  impl_->ioc.stop();
  for (auto& t : impl_->threads) {
    if (t.joinable() && t.get_id() != std::this_thread::get_id()) t.join();
  }
  impl_->ctx.close_connections();
  impl_->stopped_cv.notify_all();
}

void init_logging_from_env() {
  const char* level = std::getenv("LOG_LEVEL");
  if (level == nullptr || *level == '\0') return;
  spdlog::set_level(spdlog::level::from_str(level));
}

}  // namespace splat4d::server
