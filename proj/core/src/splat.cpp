#include "splat4d/splat.hpp"

#include <cmath>

#include "splat4d/error.hpp"

namespace splat4d {

namespace {
bool finite(const Vec3f& v) { return v.allFinite(); }
}  // namespace

bool is_valid(const Splat& s) {
  if (!finite(s.position) || !finite(s.scale) || !s.rotation.coeffs().allFinite()) return false;
  if (!std::isfinite(s.opacity) || !std::isfinite(s.color.r) || !std::isfinite(s.color.g) ||
      !std::isfinite(s.color.b)) {
    return false;
  }
  if (std::abs(s.rotation.norm() - 1.0f) > 1e-6f) return false;
  if (!(s.scale.array() > 0.0f).all()) return false;
  if (s.opacity < 0.0f || s.opacity > 1.0f) return false;
  for (float c : s.sh_rest) {
    if (!std::isfinite(c)) return false;
  }
  return true;
}

SplatCloud::SplatCloud(std::vector<Splat> splats, std::uint64_t version)
    : splats_(std::move(splats)), version_(version) {
  if (!splats_.empty()) bounds_ = bounding_box(std::span<const Splat>(splats_));
}

Aabb bounding_box(std::span<const Splat> splats) {
  if (splats.empty()) throw Error(ErrorCode::EmptyCloud, "bounding box of an empty cloud");
  Aabb box{splats.front().position, splats.front().position};
  for (const Splat& s : splats) {
    box.min = box.min.cwiseMin(s.position);
    box.max = box.max.cwiseMax(s.position);
  }
  return box;
}

Aabb bounding_box(const SplatCloud& cloud) { return bounding_box(cloud.splats()); }

}  // namespace splat4d
