#include <gtest/gtest.h>

#include <fstream>

#include "fixtures.hpp"
#include "ply_builder.hpp"
#include "splat4d/session/scene_store.hpp"

using namespace splat4d;
using namespace splat4d::session;
using namespace splat4d::testing;

namespace {

std::vector<std::uint8_t> small_ply(float x) {
  std::vector<RawVertex> v(3);
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i].x = x + static_cast<float>(i);
    v[i].scale[0] = v[i].scale[1] = v[i].scale[2] = -2.0f;
  }
  return build_ply(v);
}

}  // namespace

TEST(Sha256, KnownVector) {
  const std::string abc = "abc";
  EXPECT_EQ(sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(abc.data()), abc.size())),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(SceneStore, SinglePlyGetsOneFrameDuration) {
  TempDir dir;
  SceneStore store(dir.path());
  const std::string id = store.upload({{"a.ply", small_ply(0)}});
  const ScenePtr scene = store.get(id);
  ASSERT_EQ(scene->manifest.frames.size(), 1u);
  EXPECT_DOUBLE_EQ(scene->manifest.duration, 1.0 / 30.0);
  EXPECT_EQ(scene->frames[0]->size(), 3u);
}

TEST(SceneStore, ThreePlysAreSpacedAtThirtyFps) {
  TempDir dir;
  SceneStore store(dir.path());
  const std::string id = store.upload({{"f0.ply", small_ply(0)}, {"f1.ply", small_ply(1)}, {"f2.ply", small_ply(2)}});
  const ScenePtr scene = store.get(id);
  ASSERT_EQ(scene->manifest.frames.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(scene->manifest.frames[i].t, static_cast<double>(i) / 30.0, 1e-12);
  EXPECT_FLOAT_EQ(scene->frames[2]->splats()[0].position.x(), 2.0f);
}

TEST(SceneStore, IdenticalUploadsShareAnId) {
  TempDir dir;
  SceneStore store(dir.path());
  const std::string a = store.upload({{"a.ply", small_ply(0)}});
  const std::string b = store.upload({{"a.ply", small_ply(0)}});
  const std::string c = store.upload({{"a.ply", small_ply(5)}});
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_EQ(a.size(), 32u);
}

TEST(SceneStore, BadPlyNamesFileAndOffset) {
  TempDir dir;
  SceneStore store(dir.path());
  std::vector<RawVertex> v(4);
  PlyBuildOptions opt;
  opt.truncate = 10;
  try {
    store.upload({{"good.ply", small_ply(0)}, {"broken.ply", build_ply(v, opt)}});
    FAIL() << "upload accepted a truncated file";
  } catch (const UploadError& e) {
    EXPECT_EQ(e.file(), "broken.ply");
    EXPECT_NE(std::string(e.what()).find("broken.ply"), std::string::npos);
    EXPECT_EQ(e.code(), ErrorCode::Truncated);
    EXPECT_TRUE(e.offset().has_value());
  }
  EXPECT_TRUE(store.list().empty());
}

TEST(SceneStore, RejectsUnusableUploads) {
  TempDir dir;
  SceneStore store(dir.path());
  EXPECT_THROW(store.upload({}), Error);
  EXPECT_THROW(store.upload({{"../evil.ply", small_ply(0)}}), Error);
  EXPECT_THROW(store.upload({{"a.ply", small_ply(0)}, {"a.ply", small_ply(1)}}), Error);
  const std::string manifest = R"({"frames":[{"t":0,"file":"missing.ply"}]})";
  EXPECT_THROW(store.upload({{"a.ply", small_ply(0)}, {"m.json", {manifest.begin(), manifest.end()}}}), Error);
}

TEST(SceneStore, ManifestPartControlsTiming) {
  TempDir dir;
  SceneStore store(dir.path());
  const std::string manifest = R"({"frames":[{"t":0,"file":"b.ply"},{"t":0.25,"file":"a.ply"}],"duration":0.5})";
  const std::string id =
      store.upload({{"a.ply", small_ply(10)}, {"b.ply", small_ply(20)}, {"m.json", {manifest.begin(), manifest.end()}}});
  const ScenePtr scene = store.get(id);
  EXPECT_DOUBLE_EQ(scene->manifest.duration, 0.5);
  EXPECT_FLOAT_EQ(scene->frames[0]->splats()[0].position.x(), 20.0f);
}

TEST(SceneStore, NotFoundAndReload) {
  TempDir dir;
  std::string id;
  {
    SceneStore store(dir.path());
    id = store.upload({{"f0.ply", small_ply(0)}, {"f1.ply", small_ply(1)}});
    try {
      store.get("no-such-scene");
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::NotFound);
    }
    EXPECT_THROW(store.get(".."), Error);
    EXPECT_FALSE(store.contains("../x"));
  }
  SceneStore fresh(dir.path());
  EXPECT_TRUE(fresh.contains(id));
  const ScenePtr scene = fresh.get(id);
  EXPECT_EQ(scene->frames.size(), 2u);
  EXPECT_EQ(fresh.list(), std::vector<std::string>{id});
}
