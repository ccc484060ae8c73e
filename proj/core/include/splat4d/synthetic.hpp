#pragma once

#include <cstddef>
#include <cstdint>

#include "splat4d/camera.hpp"
#include "splat4d/splat.hpp"

namespace splat4d {

/// Deterministic benchmark scene: `count` small splats filling a slab that covers the view of
/// synthetic_camera() at any 16:9 resolution.
SplatCloud make_synthetic_scene(std::size_t count, std::uint64_t seed = 1);

/// Camera at (0,0,5) looking at the origin with 60 degree vertical fov.
CameraPose synthetic_camera();

}  // namespace splat4d
