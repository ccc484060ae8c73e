#include <gtest/gtest.h>

#include <thread>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "splat4d/error.hpp"
#include "splat4d/foveation.hpp"
#include "splat4d/metrics.hpp"

// After Eigen (pulled in above): httplib includes <resolv.h>.
#include <httplib.h>

using namespace splat4d;
using namespace splat4d::testing;
using nlohmann::json;

namespace {

// Local stand-in for the external importance and embedding services.
class StubService {
 public:
  StubService() {
    server_.Post("/importance", [this](const httplib::Request& req, httplib::Response& res) {
      const json body = json::parse(req.body);
      last_prompt = body.at("prompt");
      got_png = !body.at("image_png_base64").get<std::string>().empty();
      const int rows = body.at("rows"), cols = body.at("cols");
      json grid = json::array();
      for (int r = 0; r < rows; ++r) {
        json row = json::array();
        for (int c = 0; c < cols; ++c) row.push_back(r == 0 && c == 0 ? 1.5 : 0.25);
        grid.push_back(row);
      }
      res.set_content(json{{"map", grid}}.dump(), "application/json");
    });
    server_.Post("/embed", [](const httplib::Request& req, httplib::Response& res) {
      const json body = json::parse(req.body);
      const json v = body.contains("text") ? json{3.0, 4.0} : json{0.0, 2.0};
      res.set_content(json{{"embedding", v}}.dump(), "application/json");
    });
    server_.Post("/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubService() {
    server_.stop();
    thread_.join();
  }
  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

  std::string last_prompt;
  bool got_png = false;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST(HttpProviders, ImportanceMapIsFetchedAndClamped) {
  StubService svc;
  auto provider = make_http_importance_provider(svc.url("/importance"));
  const ImportanceResult r = query_provider(encode_png(keyed_image(1)), "the red car", provider.get(), 2, 3);
  EXPECT_EQ(r.source, ImportanceSource::Provider);
  EXPECT_EQ(r.map.rows(), 2);
  EXPECT_EQ(r.map.cols(), 3);
  EXPECT_EQ(r.map.at(0, 0), 1.0f);
  EXPECT_EQ(r.map.at(1, 2), 0.25f);
  EXPECT_EQ(svc.last_prompt, "the red car");
  EXPECT_TRUE(svc.got_png);
}

TEST(HttpProviders, ServerErrorFallsBack) {
  StubService svc;
  auto provider = make_http_importance_provider(svc.url("/broken"));
  const ImportanceResult r = query_provider({}, "", provider.get(), 2, 2);
  EXPECT_EQ(r.source, ImportanceSource::Heuristic);
  EXPECT_FALSE(r.diagnostic.empty());
}

TEST(HttpProviders, EmbeddingsAreNormalized) {
  StubService svc;
  auto emb = make_http_embedding_provider(svc.url("/embed"));
  const auto t = emb->embed_text("x");
  ASSERT_EQ(t.size(), 2u);
  EXPECT_NEAR(t[0], 0.6f, 1e-6);
  EXPECT_NEAR(t[1], 0.8f, 1e-6);
  EXPECT_NEAR(clip_score("x", keyed_image(0), *emb), 0.8, 1e-6);
  auto broken = make_http_embedding_provider(svc.url("/broken"));
  try {
    broken->embed_text("x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ProviderFailure);
  }
}

TEST(HttpProviders, FromEnvironment) {
  ::unsetenv("IMPORTANCE_PROVIDER_URL");
  ::unsetenv("EMBEDDING_PROVIDER_URL");
  EXPECT_EQ(importance_provider_from_env(), nullptr);
  EXPECT_EQ(embedding_provider_from_env(), nullptr);
  ::setenv("IMPORTANCE_PROVIDER_URL", "http://127.0.0.1:9/x", 1);
  ::setenv("EMBEDDING_PROVIDER_URL", "http://127.0.0.1:9/y", 1);
  EXPECT_NE(importance_provider_from_env(), nullptr);
  EXPECT_NE(embedding_provider_from_env(), nullptr);
  ::unsetenv("IMPORTANCE_PROVIDER_URL");
  ::unsetenv("EMBEDDING_PROVIDER_URL");
}
