#include "splat4d/camera.hpp"

#include <cmath>

#include "splat4d/error.hpp"

namespace splat4d {

bool is_valid(const CameraPose& p) {
  return p.position.allFinite() && p.orientation.coeffs().allFinite() && std::abs(p.orientation.norm() - 1.0) <= 1e-6 &&
         p.vfov > 0.0 && p.vfov < std::numbers::pi && p.near > 0.0 && p.near < p.far && std::isfinite(p.far);
}

CameraPose look_at(const Vec3d& eye, const Vec3d& target, const Vec3d& up) {
  const Vec3d view = target - eye;
  if (!(view.norm() > 1e-12)) throw Error(ErrorCode::DegenerateBasis, "look_at: eye coincides with target");
  const Vec3d forward = view.normalized();
  const Vec3d right_raw = forward.cross(up);
  if (!(right_raw.norm() > 1e-9 * std::max(1.0, up.norm()))) {
    throw Error(ErrorCode::DegenerateBasis, "look_at: up vector is parallel to the view direction");
  }
  const Vec3d right = right_raw.normalized();
  const Vec3d cam_up = right.cross(forward);
  Mat3d r;
  r.col(0) = right;
  r.col(1) = cam_up;
  r.col(2) = -forward;
  CameraPose pose;
  pose.position = eye;
  pose.orientation = Quatd(r).normalized();
  return pose;
}

Mat4d camera_to_world(const CameraPose& pose) {
  Mat4d m = Mat4d::Identity();
  m.topLeftCorner<3, 3>() = pose.orientation.normalized().toRotationMatrix();
  m.topRightCorner<3, 1>() = pose.position;
  return m;
}

Mat4d view_transform(const CameraPose& pose) {
  const Mat3d rt = pose.orientation.normalized().toRotationMatrix().transpose();
  Mat4d m = Mat4d::Identity();
  m.topLeftCorner<3, 3>() = rt;
  m.topRightCorner<3, 1>() = -rt * pose.position;
  return m;
}

double focal_length_px(const CameraPose& pose, int height) {
  return static_cast<double>(height) / (2.0 * std::tan(pose.vfov / 2.0));
}

}  // namespace splat4d
