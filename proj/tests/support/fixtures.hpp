#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "splat4d/camera.hpp"
#include "splat4d/foveation.hpp"
#include "splat4d/image.hpp"
#include "splat4d/manifest.hpp"
#include "splat4d/metrics.hpp"
#include "splat4d/rasterizer.hpp"
#include "splat4d/splat.hpp"
#include "splat4d/trajectory.hpp"

namespace splat4d::testing {

using Rng = std::mt19937_64;

/// Random splats in a ball of `radius` around the origin with screen sizes from sub-pixel to a
/// few tiles at typical test resolutions.
SplatCloud random_cloud(Rng& rng, std::size_t count, float radius = 1.0f);

/// Camera on a sphere of radius in [dist_min, dist_max] around the origin, looking at it.
CameraPose random_pose(Rng& rng, double dist_min = 3.0, double dist_max = 5.0);

Quatd random_unit_quat(Rng& rng);

/// Largest per-channel absolute difference; infinity when sizes differ.
float max_abs_diff(const Framebuffer& a, const Framebuffer& b);

/// Field-by-field exact equality (positions, rotations, scales, opacity, color, sh_rest).
bool same_splats(const SplatCloud& a, const SplatCloud& b);

/// Even-odd test by counting crossings of an upward vertical ray, in long double. Independent of
/// the library's horizontal-ray implementation.
bool crossing_count_inside(double px, double py, std::span<const Vec2f> polygon);

/// Largest i with t_i <= time, by linear scan.
std::size_t linear_scan_frame(const SequenceManifest& manifest, double time);

/// Manifest with given timestamps and duration, file names f0.ply, f1.ply, ...
SequenceManifest manifest_with_times(const std::vector<double>& times, double duration);

/// Removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Importance provider stubs.
class FixedProvider : public ImportanceProvider {
 public:
  explicit FixedProvider(ImportanceMap map) : map_(std::move(map)) {}
  ImportanceMap query(const std::vector<std::uint8_t>&, const std::string& prompt, int, int) override {
    ++calls;
    last_prompt = prompt;
    return map_;
  }
  std::atomic<int> calls{0};
  std::string last_prompt;

 private:
  ImportanceMap map_;
};

class ThrowingProvider : public ImportanceProvider {
 public:
  ImportanceMap query(const std::vector<std::uint8_t>&, const std::string&, int, int) override;
};

/// Embedding stub: fixed vectors per text and per image (keyed by the image's first pixel red
/// value), scripted by the test. Unknown keys throw.
class ScriptedEmbedding : public EmbeddingProvider {
 public:
  std::map<std::string, std::vector<float>> texts;
  std::map<int, std::vector<float>> images;

  std::vector<float> embed_image(const Image8& image) override;
  std::vector<float> embed_text(const std::string& text) override;
};

/// Solid image whose first pixel's red channel is `key`.
Image8 keyed_image(int key, int width = 4, int height = 4);

/// Two-keyframe trajectory orbiting the origin over `duration` seconds.
Trajectory orbit_trajectory(double duration, double distance = 4.0);

/// Reads tests/data/<name>.
std::vector<std::uint8_t> read_data_file(const std::string& name);

}  // namespace splat4d::testing
