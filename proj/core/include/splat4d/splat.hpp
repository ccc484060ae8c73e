#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "splat4d/math.hpp"

namespace splat4d {

/// SH band-0 basis constant; color = kShC0 * f_dc + 0.5.
inline constexpr float kShC0 = 0.28209479177387814f;

/// One activated 3D Gaussian. Rotation is (w,x,y,z), scale holds standard deviations.
struct Splat {
  Vec3f position = Vec3f::Zero();
  Quatf rotation = Quatf::Identity();
  Vec3f scale = Vec3f::Ones();
  float opacity = 1.0f;
  Rgb color{};
  /// Higher-order SH coefficients in file order; carried through but never shaded.
  std::vector<float> sh_rest;
};

/// True when every field is finite, rotation is unit within 1e-6, scale > 0 and opacity in [0,1].
bool is_valid(const Splat& splat);

/// Immutable, versioned array of splats. Edits produce a new cloud with a higher version.
class SplatCloud {
 public:
  SplatCloud() = default;
  explicit SplatCloud(std::vector<Splat> splats, std::uint64_t version = 0);

  std::span<const Splat> splats() const { return splats_; }
  const Splat& operator[](std::size_t i) const { return splats_[i]; }
  std::size_t size() const { return splats_.size(); }
  bool empty() const { return splats_.empty(); }
  /// Zero box for an empty cloud.
  const Aabb& bounds() const { return bounds_; }
  std::uint64_t version() const { return version_; }

 private:
  std::vector<Splat> splats_;
  Aabb bounds_;
  std::uint64_t version_ = 0;
};

using CloudPtr = std::shared_ptr<const SplatCloud>;

/// Exact min/max of splat positions. Throws Error(EmptyCloud) for an empty cloud.
Aabb bounding_box(const SplatCloud& cloud);
Aabb bounding_box(std::span<const Splat> splats);

}  // namespace splat4d
