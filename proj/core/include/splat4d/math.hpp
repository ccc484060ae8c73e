#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace splat4d {

using Vec2f = Eigen::Vector2f;
using Vec3f = Eigen::Vector3f;
using Vec3d = Eigen::Vector3d;
using Quatf = Eigen::Quaternionf;
using Quatd = Eigen::Quaterniond;
using Mat3f = Eigen::Matrix3f;
using Mat3d = Eigen::Matrix3d;
using Mat4d = Eigen::Matrix4d;

struct Aabb {
  Vec3f min = Vec3f::Zero();
  Vec3f max = Vec3f::Zero();

  bool contains(const Vec3f& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  bool operator==(const Aabb&) const = default;
};

struct Rgb {
  float r = 0.0f;
  float g = 0.0f;
  float b = 0.0f;
  bool operator==(const Rgb&) const = default;
};

}  // namespace splat4d
