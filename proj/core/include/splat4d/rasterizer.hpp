#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "splat4d/camera.hpp"
#include "splat4d/splat.hpp"

namespace splat4d {

class ThreadPool;

struct RenderConfig {
  int width = 640;
  int height = 360;
  int tile_size = 16;
  Rgb background{0.0f, 0.0f, 0.0f};
  float sigma_cutoff = 3.0f;
  float alpha_min = 1.0f / 255.0f;
  float alpha_max = 0.99f;
  float dilation = 0.3f;
  float transmittance_floor = 1e-4f;

  int tiles_x() const { return (width + tile_size - 1) / tile_size; }
  int tiles_y() const { return (height + tile_size - 1) / tile_size; }
  int tile_count() const { return tiles_x() * tiles_y(); }
};

/// Throws Error(InvalidArgument) when dimensions or alpha bounds are out of range.
void validate(const RenderConfig& cfg);

/// Inclusive pixel rectangle.
struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = -1;
  int y1 = -1;
  bool empty() const { return x1 < x0 || y1 < y0; }
};

struct ProjectedSplat {
  Vec2f mean2d = Vec2f::Zero();
  /// Inverse screen covariance [[a, b], [b, c]].
  float conic_a = 0.0f;
  float conic_b = 0.0f;
  float conic_c = 0.0f;
  float depth = 0.0f;
  Rgb color{};
  float alpha_base = 0.0f;
  /// Pixels whose centers can fall inside the sigma_cutoff ellipse, clipped to the viewport.
  PixelRect aabb;
  /// Index into the source cloud.
  std::uint32_t source_index = 0;
};

/// Linear-RGB image plus per-pixel remaining transmittance.
class Framebuffer {
 public:
  Framebuffer() = default;
  Framebuffer(int width, int height, Rgb fill = {}, float transmittance = 1.0f);

  int width() const { return width_; }
  int height() const { return height_; }
  Rgb& at(int x, int y) { return color_[index(x, y)]; }
  const Rgb& at(int x, int y) const { return color_[index(x, y)]; }
  float& transmittance(int x, int y) { return transmittance_[index(x, y)]; }
  float transmittance(int x, int y) const { return transmittance_[index(x, y)]; }
  std::span<const Rgb> pixels() const { return color_; }
  std::span<Rgb> pixels() { return color_; }
  std::span<const float> transmittances() const { return transmittance_; }

  bool operator==(const Framebuffer&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<Rgb> color_;
  std::vector<float> transmittance_;
};

/// Precomputed per-view camera quantities shared by all splats of a render pass.
struct ViewParams {
  Mat3d world_to_camera = Mat3d::Identity();
  Vec3d translation = Vec3d::Zero();
  double focal = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  double near = 0.01;
  double far = 1000.0;
};

ViewParams make_view(const CameraPose& pose, const RenderConfig& cfg);

/// Screen-space projection. Returns nullopt when the splat is behind the near plane, its
/// footprint misses the viewport, or the screen covariance is singular (det < 1e-12).
std::optional<ProjectedSplat> project(const Splat& splat, const ViewParams& view, const RenderConfig& cfg);
std::optional<ProjectedSplat> project(const Splat& splat, const CameraPose& pose, const RenderConfig& cfg);

namespace detail {
/// project() without the viewport cull (near-plane and singularity culls still apply).
std::optional<ProjectedSplat> project_uncull(const Splat& splat, const CameraPose& pose, const RenderConfig& cfg);
}  // namespace detail

/// Jacobian of pixel coordinates with respect to camera-space position (row-major 2x3).
Eigen::Matrix<double, 2, 3> projection_jacobian(const Vec3d& camera_point, double focal);
/// Pixel coordinates of a camera-space point.
Vec2f project_point(const Vec3d& camera_point, const ViewParams& view);

/// Projects every splat; culled splats are omitted. Order follows the cloud.
std::vector<ProjectedSplat> project_cloud(const SplatCloud& cloud, const CameraPose& pose, const RenderConfig& cfg);

/// Ascending depth, ties by source_index.
std::vector<std::uint32_t> sort_front_to_back(std::span<const ProjectedSplat> projected);

/// Per-tile lists (row-major tiles) of positions into `projected`, each list in `order`.
std::vector<std::vector<std::uint32_t>> bin_to_tiles(std::span<const ProjectedSplat> projected,
                                                     std::span<const std::uint32_t> order, const RenderConfig& cfg);

/// Footprint opacity at a pixel center, or 0 when outside the cutoff ellipse or below alpha_min.
/// Both renderers go through this function, so a zero here means "no contribution" everywhere.
inline float splat_alpha(const ProjectedSplat& s, float px, float py, const RenderConfig& cfg) {
  const float dx = px - s.mean2d.x();
  const float dy = py - s.mean2d.y();
  const float maha = s.conic_a * dx * dx + 2.0f * s.conic_b * dx * dy + s.conic_c * dy * dy;
  if (!(maha <= cfg.sigma_cutoff * cfg.sigma_cutoff)) return 0.0f;
  const float alpha = std::min(cfg.alpha_max, s.alpha_base * std::exp(-0.5f * maha));
  return alpha < cfg.alpha_min ? 0.0f : alpha;
}

struct PixelResult {
  Rgb color;
  float transmittance = 1.0f;
};

/// Front-to-back over-compositing of the listed splats at one pixel center (px, py).
inline PixelResult composite_pixel(std::span<const ProjectedSplat> projected, std::span<const std::uint32_t> list,
                                   float px, float py, const RenderConfig& cfg) {
  float r = 0.0f, g = 0.0f, b = 0.0f, t = 1.0f;
  for (const std::uint32_t idx : list) {
    const ProjectedSplat& s = projected[idx];
    const float alpha = splat_alpha(s, px, py, cfg);
    if (alpha == 0.0f) continue;
    const float w = t * alpha;
    r += w * s.color.r;
    g += w * s.color.g;
    b += w * s.color.b;
    t *= 1.0f - alpha;
    if (t < cfg.transmittance_floor) break;
  }
  r += t * cfg.background.r;
  g += t * cfg.background.g;
  b += t * cfg.background.b;
  return {{r, g, b}, t};
}

/// Composites the pixels (x0 + i*step, y) for x < x1 into out[i], walking `list` once in order
/// and touching each splat only across the row span of its cutoff ellipse. Every pixel sees
/// the same splats in the same order with the same arithmetic as composite_pixel, so results
/// are bit-identical; it is just cheaper.
void composite_row(std::span<const ProjectedSplat> projected, std::span<const std::uint32_t> list, int y, int x0, int x1,
                   int step, const RenderConfig& cfg, PixelResult* out);

/// Counters collected during a render pass.
struct RenderStats {
  /// Pixel samples run through the compositing loop.
  std::uint64_t composite_samples = 0;
  std::size_t projected = 0;
  std::size_t culled = 0;
};

/// Oracle renderer: every pixel walks every projected splat in depth order.
Framebuffer render_reference(const SplatCloud& cloud, const CameraPose& pose, const RenderConfig& cfg);

/// Everything a tile renderer needs, computed once per frame.
struct PreparedFrame {
  std::vector<ProjectedSplat> projected;
  std::vector<std::uint32_t> order;
  std::vector<std::vector<std::uint32_t>> tiles;
  std::size_t culled = 0;
};

PreparedFrame prepare_frame(const SplatCloud& cloud, const CameraPose& pose, const RenderConfig& cfg);

/// Composites one tile at full resolution into fb. Returns the number of pixel samples.
std::uint64_t render_tile_full(const PreparedFrame& frame, int tile_index, const RenderConfig& cfg, Framebuffer& fb);

/// Tile-binned renderer; matches render_reference within 1e-5 per channel.
Framebuffer render_tiled(const SplatCloud& cloud, const CameraPose& pose, const RenderConfig& cfg,
                         ThreadPool* pool = nullptr, RenderStats* stats = nullptr);

}  // namespace splat4d
