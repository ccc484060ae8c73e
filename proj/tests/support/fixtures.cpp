#include "fixtures.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>

#include "splat4d/error.hpp"

namespace splat4d::testing {

Quatd random_unit_quat(Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Quatd q(g(rng), g(rng), g(rng), g(rng));
  if (q.norm() < 1e-9) return Quatd::Identity();
  return q.normalized();
}

SplatCloud random_cloud(Rng& rng, std::size_t count, float radius) {
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  std::vector<Splat> splats;
  splats.reserve(count);
  while (splats.size() < count) {
    Vec3f p(u(rng), u(rng), u(rng));
    if (p.squaredNorm() > 1.0f) continue;
    Splat s;
    s.position = p * radius;
    s.rotation = random_unit_quat(rng).cast<float>();
    // Log-uniform sizes between 0.01 and 0.2 of the radius, with some needles.
    for (int k = 0; k < 3; ++k) s.scale[k] = radius * 0.01f * std::pow(20.0f, unit(rng));
    s.opacity = 0.05f + 0.94f * unit(rng);
    s.color = {unit(rng), unit(rng), unit(rng)};
    splats.push_back(std::move(s));
  }
  return SplatCloud(std::move(splats));
}

CameraPose random_pose(Rng& rng, double dist_min, double dist_max) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> d(dist_min, dist_max);
  Vec3d dir(g(rng), g(rng), g(rng));
  while (dir.norm() < 1e-6 || std::abs(dir.normalized().y()) > 0.95) dir = Vec3d(g(rng), g(rng), g(rng));
  return look_at(dir.normalized() * d(rng), Vec3d::Zero(), Vec3d(0, 1, 0));
}

float max_abs_diff(const Framebuffer& a, const Framebuffer& b) {
  if (a.width() != b.width() || a.height() != b.height()) return std::numeric_limits<float>::infinity();
  float m = 0.0f;
  for (std::size_t i = 0; i < a.pixels().size(); ++i) {
    const Rgb& p = a.pixels()[i];
    const Rgb& q = b.pixels()[i];
    m = std::max({m, std::abs(p.r - q.r), std::abs(p.g - q.g), std::abs(p.b - q.b)});
  }
  return m;
}

bool same_splats(const SplatCloud& a, const SplatCloud& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Splat& p = a[i];
    const Splat& q = b[i];
    if (p.position != q.position || p.rotation.coeffs() != q.rotation.coeffs() || p.scale != q.scale ||
        p.opacity != q.opacity || !(p.color == q.color) || p.sh_rest != q.sh_rest) {
      return false;
    }
  }
  return true;
}

bool crossing_count_inside(double px, double py, std::span<const Vec2f> polygon) {
  int crossings = 0;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    const long double ax = polygon[i].x(), ay = polygon[i].y();
    const long double bx = polygon[(i + 1) % n].x(), by = polygon[(i + 1) % n].y();
    // Edge straddles the vertical line x = px (half-open on the left end).
    const bool straddle = (ax <= px) != (bx <= px);
    if (!straddle) continue;
    const long double y_at = ay + (static_cast<long double>(px) - ax) * (by - ay) / (bx - ax);
    if (y_at > py) ++crossings;
  }
  return crossings % 2 == 1;
}

std::size_t linear_scan_frame(const SequenceManifest& manifest, double time) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < manifest.frames.size(); ++i) {
    if (manifest.frames[i].t <= time) best = i;
  }
  return best;
}

SequenceManifest manifest_with_times(const std::vector<double>& times, double duration) {
  SequenceManifest m;
  for (std::size_t i = 0; i < times.size(); ++i) m.frames.push_back({"f" + std::to_string(i) + ".ply", times[i]});
  m.duration = duration;
  return m;
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          ("splat4d_test_" + std::to_string(rd()) + "_" + std::to_string(counter.fetch_add(1)));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

ImportanceMap ThrowingProvider::query(const std::vector<std::uint8_t>&, const std::string&, int, int) {
  throw Error(ErrorCode::ProviderFailure, "stub provider is down");
}

std::vector<float> ScriptedEmbedding::embed_image(const Image8& image) {
  const int key = image.rgb.empty() ? -1 : image.rgb[0];
  const auto it = images.find(key);
  if (it == images.end()) throw Error(ErrorCode::ProviderFailure, "no scripted image embedding");
  return it->second;
}

std::vector<float> ScriptedEmbedding::embed_text(const std::string& text) {
  const auto it = texts.find(text);
  if (it == texts.end()) throw Error(ErrorCode::ProviderFailure, "no scripted text embedding");
  return it->second;
}

Image8 keyed_image(int key, int width, int height) {
  Image8 img;
  img.width = width;
  img.height = height;
  img.rgb.assign(static_cast<std::size_t>(width * height * 3), 0);
  img.rgb[0] = static_cast<std::uint8_t>(key);
  return img;
}

Trajectory orbit_trajectory(double duration, double distance) {
  Trajectory traj;
  traj.mode = InterpolationMode::Linear;
  traj.keyframes.push_back({look_at(Vec3d(0, 0, distance), Vec3d::Zero(), Vec3d(0, 1, 0)), 0.0});
  if (duration > 0) {
    const double a = 0.3;
    traj.keyframes.push_back(
        {look_at(Vec3d(distance * std::sin(a), 0.2, distance * std::cos(a)), Vec3d::Zero(), Vec3d(0, 1, 0)), duration});
  }
  return traj;
}

std::vector<std::uint8_t> read_data_file(const std::string& name) {
  std::ifstream in(std::filesystem::path(SPLAT4D_TEST_DATA_DIR) / name, std::ios::binary);
  if (!in) throw std::runtime_error("missing test data file " + name);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace splat4d::testing
