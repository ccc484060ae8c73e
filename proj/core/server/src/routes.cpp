#include <map>

#include <nlohmann/json.hpp>

#include "splat4d/manifest.hpp"
#include "splat4d/server/multipart.hpp"
#include "splat4d/server/server.hpp"

namespace splat4d::server {

namespace http = boost::beast::http;
using nlohmann::json;

namespace {

HttpResponse json_response(const HttpRequest& req, http::status status, const json& body) {
  HttpResponse res{status, req.version()};
  res.set(http::field::content_type, "application/json");
  res.keep_alive(req.keep_alive());
  res.body() = body.dump();
  res.prepare_payload();
  return res;
}

json error_body(const Error& e, const std::string* file = nullptr) {
  json body{{"error", std::string(to_string(e.code()))}, {"message", e.what()}};
  if (file != nullptr) body["file"] = *file;
  if (e.offset()) body["offset"] = *e.offset();
  return body;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string percent_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size() && hex_value(s[i + 1]) >= 0 && hex_value(s[i + 2]) >= 0) {
      out.push_back(static_cast<char>(hex_value(s[i + 1]) * 16 + hex_value(s[i + 2])));
      i += 2;
    } else if (s[i] == '+') {
      out.push_back(' ');
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

HttpResponse upload(const HttpRequest& req, ServerContext& ctx) {
  std::vector<session::UploadFile> files;
  const std::string content_type(req[http::field::content_type]);
  try {
    if (auto boundary = multipart_boundary(content_type)) {
      files = parse_multipart(req.body(), *boundary);
    } else {
      return json_response(req, http::status::unsupported_media_type,
                           {{"error", "unsupported_media_type"}, {"message", "expected multipart/form-data"}});
    }
  } catch (const Error& e) {
    return json_response(req, http::status::bad_request, error_body(e));
  }
  try {
    const std::string id = ctx.store.upload(files);
    return json_response(req, http::status::ok, {{"scene_id", id}});
  } catch (const session::UploadError& e) {
    return json_response(req, http::status::bad_request, error_body(e, &e.file()));
  } catch (const Error& e) {
    return json_response(req, http::status::bad_request, error_body(e));
  }
}

}  // namespace

std::map<std::string, std::string> parse_query(std::string_view query) {
  std::map<std::string, std::string> out;
  std::size_t pos = 0;
  while (pos < query.size()) {
    std::size_t end = query.find('&', pos);
    if (end == std::string_view::npos) end = query.size();
    const std::string_view item = query.substr(pos, end - pos);
    const std::size_t eq = item.find('=');
    if (!item.empty()) {
      if (eq == std::string_view::npos) {
        out[percent_decode(item)] = "";
      } else {
        out[percent_decode(item.substr(0, eq))] = percent_decode(item.substr(eq + 1));
      }
    }
    pos = end + 1;
  }
  return out;
}

HttpResponse route_request(const HttpRequest& req, ServerContext& ctx) {
  const std::string_view target(req.target().data(), req.target().size());
  const std::string_view path = target.substr(0, target.find('?'));

  if (path == "/healthz") {
    if (req.method() != http::verb::get) return json_response(req, http::status::method_not_allowed, {{"error", "method_not_allowed"}});
    return json_response(req, http::status::ok, {{"status", "ok"}, {"sessions", ctx.registry.size()}});
  }
  if (path == "/scenes") {
    if (req.method() == http::verb::post) return upload(req, ctx);
    if (req.method() == http::verb::get) return json_response(req, http::status::ok, {{"scenes", ctx.store.list()}});
    return json_response(req, http::status::method_not_allowed, {{"error", "method_not_allowed"}});
  }
  constexpr std::string_view kPrefix = "/scenes/";
  constexpr std::string_view kSuffix = "/manifest";
  if (path.starts_with(kPrefix) && path.ends_with(kSuffix) && path.size() > kPrefix.size() + kSuffix.size()) {
    if (req.method() != http::verb::get) return json_response(req, http::status::method_not_allowed, {{"error", "method_not_allowed"}});
    const std::string id(path.substr(kPrefix.size(), path.size() - kPrefix.size() - kSuffix.size()));
    try {
      const session::ScenePtr scene = ctx.store.get(id);
      return json_response(req, http::status::ok, json::parse(manifest_to_json(scene->manifest)));
    } catch (const session::UploadError& e) {
      return json_response(req, http::status::internal_server_error, error_body(e, &e.file()));
    } catch (const Error& e) {
      const auto status = e.code() == ErrorCode::NotFound ? http::status::not_found : http::status::internal_server_error;
      return json_response(req, status, error_body(e));
    }
  }
  return json_response(req, http::status::not_found, {{"error", "not_found"}, {"message", "no route for " + std::string(path)}});
}

}  // namespace splat4d::server
