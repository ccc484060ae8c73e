#include "splat4d/rasterizer.hpp"

#include <numeric>

#include "splat4d/error.hpp"
#include "splat4d/thread_pool.hpp"

namespace splat4d {

namespace {
constexpr int kMaxRowPixels = 64;
}  // namespace

void validate(const RenderConfig& cfg) {
  if (cfg.width <= 0 || cfg.height <= 0 || cfg.tile_size <= 0) {
    throw Error(ErrorCode::InvalidArgument, "render width, height and tile_size must be positive");
  }
  if (cfg.width > 65535 || cfg.height > 65535) throw Error(ErrorCode::InvalidArgument, "render size exceeds 65535");
  if (!(cfg.alpha_min > 0.0f && cfg.alpha_min < cfg.alpha_max && cfg.alpha_max < 1.0f)) {
    throw Error(ErrorCode::InvalidArgument, "need 0 < alpha_min < alpha_max < 1");
  }
  if (!(cfg.sigma_cutoff > 0.0f) || !(cfg.dilation >= 0.0f) || !(cfg.transmittance_floor >= 0.0f)) {
    throw Error(ErrorCode::InvalidArgument, "sigma_cutoff, dilation and transmittance_floor out of range");
  }
}

Framebuffer::Framebuffer(int width, int height, Rgb fill, float transmittance)
    : width_(width),
      height_(height),
      color_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill),
      transmittance_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), transmittance) {}

ViewParams make_view(const CameraPose& pose, const RenderConfig& cfg) {
  ViewParams v;
  v.world_to_camera = pose.orientation.normalized().toRotationMatrix().transpose();
  v.translation = -v.world_to_camera * pose.position;
  v.focal = focal_length_px(pose, cfg.height);
  v.cx = cfg.width / 2.0;
  v.cy = cfg.height / 2.0;
  v.near = pose.near;
  v.far = pose.far;
  return v;
}

Eigen::Matrix<double, 2, 3> projection_jacobian(const Vec3d& p, double focal) {
  // u = cx + f*x/d, v = cy - f*y/d with depth d = -z.
  const double d = -p.z();
  Eigen::Matrix<double, 2, 3> j;
  j << focal / d, 0.0, focal * p.x() / (d * d),  //
      0.0, -focal / d, -focal * p.y() / (d * d);
  return j;
}

Vec2f project_point(const Vec3d& p, const ViewParams& view) {
  const double d = -p.z();
  return Vec2f(static_cast<float>(view.cx + view.focal * p.x() / d), static_cast<float>(view.cy - view.focal * p.y() / d));
}

namespace {

std::optional<ProjectedSplat> project_impl(const Splat& splat, const ViewParams& view, const RenderConfig& cfg,
                                           bool cull_viewport) {
  const Vec3d p_cam = view.world_to_camera * splat.position.cast<double>() + view.translation;
  const double depth = -p_cam.z();
  if (!(depth > view.near)) return std::nullopt;

  const Mat3d rot = splat.rotation.cast<double>().normalized().toRotationMatrix();
  const Vec3d s2 = splat.scale.cast<double>().cwiseProduct(splat.scale.cast<double>());
  const Mat3d cov_world = rot * s2.asDiagonal() * rot.transpose();
  const Mat3d cov_cam = view.world_to_camera * cov_world * view.world_to_camera.transpose();
  const auto jac = projection_jacobian(p_cam, view.focal);
  Eigen::Matrix2d cov2d = jac * cov_cam * jac.transpose();
  cov2d(0, 0) += cfg.dilation;
  cov2d(1, 1) += cfg.dilation;

  const double det = cov2d(0, 0) * cov2d(1, 1) - cov2d(0, 1) * cov2d(1, 0);
  if (!(det >= 1e-12)) return std::nullopt;

  ProjectedSplat out;
  out.mean2d = project_point(p_cam, view);
  out.conic_a = static_cast<float>(cov2d(1, 1) / det);
  out.conic_b = static_cast<float>(-cov2d(0, 1) / det);
  out.conic_c = static_cast<float>(cov2d(0, 0) / det);
  out.depth = static_cast<float>(depth);
  out.color = splat.color;
  out.alpha_base = splat.opacity;

  const double mid = 0.5 * (cov2d(0, 0) + cov2d(1, 1));
  const double lambda_max = mid + std::sqrt(std::max(0.0, mid * mid - det));
  const double reach = cfg.sigma_cutoff * std::sqrt(lambda_max);
  const double mx = out.mean2d.x();
  const double my = out.mean2d.y();
  if (cull_viewport && (mx + reach < 0.0 || mx - reach > cfg.width || my + reach < 0.0 || my - reach > cfg.height)) {
    return std::nullopt;
  }

  // Exact bounding box of the cutoff ellipse, padded by a pixel against float rounding.
  const double rx = cfg.sigma_cutoff * std::sqrt(cov2d(0, 0));
  const double ry = cfg.sigma_cutoff * std::sqrt(cov2d(1, 1));
  auto clampi = [](double v, int lo, int hi) {
    return static_cast<int>(std::clamp(v, static_cast<double>(lo), static_cast<double>(hi)));
  };
  out.aabb.x0 = clampi(std::ceil(mx - rx - 0.5) - 1.0, 0, cfg.width);
  out.aabb.x1 = clampi(std::floor(mx + rx - 0.5) + 1.0, -1, cfg.width - 1);
  out.aabb.y0 = clampi(std::ceil(my - ry - 0.5) - 1.0, 0, cfg.height);
  out.aabb.y1 = clampi(std::floor(my + ry - 0.5) + 1.0, -1, cfg.height - 1);
  if (cull_viewport && out.aabb.empty()) return std::nullopt;
  return out;
}

}  // namespace

namespace detail {
// Projection without viewport culling, for culling-soundness checks.
std::optional<ProjectedSplat> project_uncull(const Splat& splat, const CameraPose& pose, const RenderConfig& cfg) {
  return project_impl(splat, make_view(pose, cfg), cfg, false);
}
}  // namespace detail

std::optional<ProjectedSplat> project(const Splat& splat, const ViewParams& view, const RenderConfig& cfg) {
  return project_impl(splat, view, cfg, true);
}

std::optional<ProjectedSplat> project(const Splat& splat, const CameraPose& pose, const RenderConfig& cfg) {
  return project(splat, make_view(pose, cfg), cfg);
}

std::vector<ProjectedSplat> project_cloud(const SplatCloud& cloud, const CameraPose& pose, const RenderConfig& cfg) {
  const ViewParams view = make_view(pose, cfg);
  std::vector<ProjectedSplat> out;
  out.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (auto p = project(cloud[i], view, cfg)) {
      p->source_index = static_cast<std::uint32_t>(i);
      out.push_back(*p);
    }
  }
  return out;
}

std::vector<std::uint32_t> sort_front_to_back(std::span<const ProjectedSplat> projected) {
  std::vector<std::uint32_t> order(projected.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    const ProjectedSplat& pa = projected[a];
    const ProjectedSplat& pb = projected[b];
    if (pa.depth != pb.depth) return pa.depth < pb.depth;
    if (pa.source_index != pb.source_index) return pa.source_index < pb.source_index;
    return a < b;
  });
  return order;
}

std::vector<std::vector<std::uint32_t>> bin_to_tiles(std::span<const ProjectedSplat> projected,
                                                     std::span<const std::uint32_t> order, const RenderConfig& cfg) {
  const int tx = cfg.tiles_x();
  std::vector<std::vector<std::uint32_t>> tiles(static_cast<std::size_t>(cfg.tile_count()));
  for (const std::uint32_t idx : order) {
    const PixelRect& r = projected[idx].aabb;
    if (r.empty()) continue;
    const int t0x = r.x0 / cfg.tile_size;
    const int t1x = r.x1 / cfg.tile_size;
    const int t0y = r.y0 / cfg.tile_size;
    const int t1y = r.y1 / cfg.tile_size;
    for (int ty = t0y; ty <= t1y; ++ty) {
      for (int txi = t0x; txi <= t1x; ++txi) tiles[static_cast<std::size_t>(ty * tx + txi)].push_back(idx);
    }
  }
  return tiles;
}

PreparedFrame prepare_frame(const SplatCloud& cloud, const CameraPose& pose, const RenderConfig& cfg) {
  validate(cfg);
  PreparedFrame frame;
  frame.projected = project_cloud(cloud, pose, cfg);
  frame.culled = cloud.size() - frame.projected.size();
  frame.order = sort_front_to_back(frame.projected);
  frame.tiles = bin_to_tiles(frame.projected, frame.order, cfg);
  return frame;
}

void composite_row(std::span<const ProjectedSplat> projected, std::span<const std::uint32_t> list, int y, int x0, int x1,
                   int step, const RenderConfig& cfg, PixelResult* out) {
  const int n = x1 > x0 ? (x1 - x0 + step - 1) / step : 0;
  if (n <= 0) return;
  thread_local std::vector<float> acc;  // r, g, b, t per pixel
  thread_local std::vector<std::uint8_t> done;
  acc.assign(static_cast<std::size_t>(n) * 4, 0.0f);
  done.assign(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) acc[static_cast<std::size_t>(i) * 4 + 3] = 1.0f;
  int remaining = n;

  const float py = static_cast<float>(y) + 0.5f;
  // Slightly inflated radius so float rounding in splat_alpha can never accept a pixel that the
  // span below excludes; splat_alpha still makes the exact decision.
  const double r2 = static_cast<double>(cfg.sigma_cutoff) * cfg.sigma_cutoff * (1.0 + 1e-3) + 1e-3;
  for (const std::uint32_t idx : list) {
    const ProjectedSplat& s = projected[idx];
    if (y < s.aabb.y0 || y > s.aabb.y1) continue;
    // alpha never exceeds alpha_base, so such splats are always rejected.
    if (s.alpha_base < cfg.alpha_min) continue;
    const double a = s.conic_a;
    const double b = s.conic_b;
    const double c = s.conic_c;
    const double dy = static_cast<double>(py) - s.mean2d.y();
    const double disc = a * r2 - dy * dy * (a * c - b * b);
    if (disc < 0.0) continue;
    const double half = std::sqrt(disc) / a;
    const double xc = s.mean2d.x() - b * dy / a;
    const int lo = std::max({s.aabb.x0, x0, static_cast<int>(std::floor(xc - half - 0.5)) - 1});
    const int hi = std::min({s.aabb.x1, x1 - 1, static_cast<int>(std::ceil(xc + half - 0.5)) + 1});
    if (lo > hi) continue;
    const int i0 = (lo - x0 + step - 1) / step;
    const int i1 = (hi - x0) / step;
    for (int i = i0; i <= i1; ++i) {
      if (done[static_cast<std::size_t>(i)]) continue;
      const float alpha = splat_alpha(s, static_cast<float>(x0 + i * step) + 0.5f, py, cfg);
      if (alpha == 0.0f) continue;
      float* p = &acc[static_cast<std::size_t>(i) * 4];
      const float w = p[3] * alpha;
      p[0] += w * s.color.r;
      p[1] += w * s.color.g;
      p[2] += w * s.color.b;
      p[3] *= 1.0f - alpha;
      if (p[3] < cfg.transmittance_floor) {
        done[static_cast<std::size_t>(i)] = 1;
        if (--remaining == 0) break;
      }
    }
    if (remaining == 0) break;
  }
  for (int i = 0; i < n; ++i) {
    const float* p = &acc[static_cast<std::size_t>(i) * 4];
    const float t = p[3];
    out[i] = {{p[0] + t * cfg.background.r, p[1] + t * cfg.background.g, p[2] + t * cfg.background.b}, t};
  }
}

std::uint64_t render_tile_full(const PreparedFrame& frame, int tile_index, const RenderConfig& cfg, Framebuffer& fb) {
  const int tx = tile_index % cfg.tiles_x();
  const int ty = tile_index / cfg.tiles_x();
  const int x0 = tx * cfg.tile_size;
  const int y0 = ty * cfg.tile_size;
  const int x1 = std::min(x0 + cfg.tile_size, cfg.width);
  const int y1 = std::min(y0 + cfg.tile_size, cfg.height);
  const auto& list = frame.tiles[static_cast<std::size_t>(tile_index)];
  PixelResult row[kMaxRowPixels];
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; x += kMaxRowPixels) {
      const int end = std::min(x + kMaxRowPixels, x1);
      composite_row(frame.projected, list, y, x, end, 1, cfg, row);
      for (int i = 0; i < end - x; ++i) {
        fb.at(x + i, y) = row[i].color;
        fb.transmittance(x + i, y) = row[i].transmittance;
      }
    }
  }
  return static_cast<std::uint64_t>(x1 - x0) * static_cast<std::uint64_t>(y1 - y0);
}

Framebuffer render_reference(const SplatCloud& cloud, const CameraPose& pose, const RenderConfig& cfg) {
  validate(cfg);
  const std::vector<ProjectedSplat> projected = project_cloud(cloud, pose, cfg);
  const std::vector<std::uint32_t> order = sort_front_to_back(projected);
  Framebuffer fb(cfg.width, cfg.height);
  for (int y = 0; y < cfg.height; ++y) {
    for (int x = 0; x < cfg.width; ++x) {
      const PixelResult px =
          composite_pixel(projected, order, static_cast<float>(x) + 0.5f, static_cast<float>(y) + 0.5f, cfg);
      fb.at(x, y) = px.color;
      fb.transmittance(x, y) = px.transmittance;
    }
  }
  return fb;
}

Framebuffer render_tiled(const SplatCloud& cloud, const CameraPose& pose, const RenderConfig& cfg, ThreadPool* pool,
                         RenderStats* stats) {
  const PreparedFrame frame = prepare_frame(cloud, pose, cfg);
  Framebuffer fb(cfg.width, cfg.height);
  ThreadPool& workers = pool != nullptr ? *pool : default_thread_pool();
  workers.parallel_for(static_cast<std::size_t>(cfg.tile_count()),
                       [&](std::size_t t) { render_tile_full(frame, static_cast<int>(t), cfg, fb); });
  if (stats != nullptr) {
    stats->composite_samples = static_cast<std::uint64_t>(cfg.width) * static_cast<std::uint64_t>(cfg.height);
    stats->projected = frame.projected.size();
    stats->culled = frame.culled;
  }
  return fb;
}

}  // namespace splat4d
