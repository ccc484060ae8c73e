#pragma once

#include <numbers>

#include "splat4d/math.hpp"

namespace splat4d {

/// Pinhole camera. Orientation maps camera space to world space; the camera looks down its
/// local -z axis with +y up and +x right.
struct CameraPose {
  Vec3d position = Vec3d::Zero();
  Quatd orientation = Quatd::Identity();
  double vfov = std::numbers::pi / 3.0;
  double near = 0.01;
  double far = 1000.0;
};

bool is_valid(const CameraPose& pose);

/// Throws Error(DegenerateBasis) when eye == target or up is parallel to the view direction.
/// Uses vfov 60 degrees, near 0.01 and far 1000.
CameraPose look_at(const Vec3d& eye, const Vec3d& target, const Vec3d& up);

Mat4d camera_to_world(const CameraPose& pose);
/// World-to-camera rigid transform (inverse of camera_to_world).
Mat4d view_transform(const CameraPose& pose);

/// Focal length in pixels for a viewport of the given height.
double focal_length_px(const CameraPose& pose, int height);

}  // namespace splat4d
