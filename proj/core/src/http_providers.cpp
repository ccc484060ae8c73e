#include <cmath>
#include <cstdlib>

#include <nlohmann/json.hpp>

#include "splat4d/error.hpp"
#include "splat4d/foveation.hpp"
#include "splat4d/metrics.hpp"

// After Eigen: httplib pulls in <resolv.h>, whose _res macro collides with Eigen internals.
#include <httplib.h>

namespace splat4d {

namespace {

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;
};

Endpoint split_url(const std::string& url) {
  const auto scheme = url.find("://");
  const auto path_start = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

nlohmann::json post_json(const Endpoint& ep, const nlohmann::json& body, std::chrono::milliseconds timeout) {
  httplib::Client client(ep.base);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  auto res = client.Post(ep.path, body.dump(), "application/json");
  if (!res) throw Error(ErrorCode::ProviderFailure, "provider request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw Error(ErrorCode::ProviderFailure, "provider answered HTTP " + std::to_string(res->status));
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ProviderFailure, std::string("provider sent malformed JSON: ") + e.what());
  }
}

class HttpImportanceProvider final : public ImportanceProvider {
 public:
  HttpImportanceProvider(std::string url, std::chrono::milliseconds timeout)
      : endpoint_(split_url(url)), timeout_(timeout) {}

  ImportanceMap query(const std::vector<std::uint8_t>& png, const std::string& prompt, int rows, int cols) override {
    const nlohmann::json request{
        {"image_png_base64", base64_encode(png)}, {"prompt", prompt}, {"rows", rows}, {"cols", cols}};
    const nlohmann::json response = post_json(endpoint_, request, timeout_);
    try {
      const auto& grid = response.at("map");
      const int got_rows = static_cast<int>(grid.size());
      const int got_cols = got_rows > 0 ? static_cast<int>(grid.at(0).size()) : 0;
      std::vector<float> values;
      values.reserve(static_cast<std::size_t>(got_rows) * static_cast<std::size_t>(got_cols));
      for (const auto& row : grid) {
        if (static_cast<int>(row.size()) != got_cols) throw Error(ErrorCode::ProviderFailure, "ragged importance map");
        for (const auto& v : row) values.push_back(v.get<float>());
      }
      return ImportanceMap(got_rows, got_cols, std::move(values));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ProviderFailure, std::string("importance response: ") + e.what());
    }
  }

  std::chrono::milliseconds timeout() const override { return timeout_; }

 private:
  Endpoint endpoint_;
  std::chrono::milliseconds timeout_;
};

std::vector<float> unit_vector(std::vector<float> v) {
  double n = 0.0;
  for (float x : v) n += static_cast<double>(x) * x;
  n = std::sqrt(n);
  if (!(n > 0.0) || !std::isfinite(n)) throw Error(ErrorCode::ProviderFailure, "embedding has zero or non-finite norm");
  for (float& x : v) x = static_cast<float>(x / n);
  return v;
}

class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  HttpEmbeddingProvider(std::string url, std::chrono::milliseconds timeout) : endpoint_(split_url(url)), timeout_(timeout) {}

  std::vector<float> embed_image(const Image8& image) override {
    return fetch({{"image_png_base64", base64_encode(encode_png(image))}});
  }

  std::vector<float> embed_text(const std::string& text) override { return fetch({{"text", text}}); }

 private:
  std::vector<float> fetch(const nlohmann::json& request) {
    const nlohmann::json response = post_json(endpoint_, request, timeout_);
    try {
      return unit_vector(response.at("embedding").get<std::vector<float>>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ProviderFailure, std::string("embedding response: ") + e.what());
    }
  }

  Endpoint endpoint_;
  std::chrono::milliseconds timeout_;
};

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v == nullptr ? std::string() : std::string(v);
}

}  // namespace

std::unique_ptr<ImportanceProvider> make_http_importance_provider(const std::string& url, std::chrono::milliseconds timeout) {
  return std::make_unique<HttpImportanceProvider>(url, timeout);
}

std::unique_ptr<ImportanceProvider> importance_provider_from_env() {
  const std::string url = env_or_empty("IMPORTANCE_PROVIDER_URL");
  if (url.empty()) return nullptr;
  return make_http_importance_provider(url);
}

std::unique_ptr<EmbeddingProvider> make_http_embedding_provider(const std::string& url, std::chrono::milliseconds timeout) {
  return std::make_unique<HttpEmbeddingProvider>(url, timeout);
}

std::unique_ptr<EmbeddingProvider> embedding_provider_from_env() {
  const std::string url = env_or_empty("EMBEDDING_PROVIDER_URL");
  if (url.empty()) return nullptr;
  return make_http_embedding_provider(url);
}

}  // namespace splat4d
