#include "splat4d/trajectory.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "splat4d/error.hpp"

namespace splat4d {

double Trajectory::start_time() const {
  if (keyframes.empty()) throw Error(ErrorCode::EmptyTrajectory, "trajectory has no keyframes");
  return keyframes.front().time;
}

double Trajectory::end_time() const {
  if (keyframes.empty()) throw Error(ErrorCode::EmptyTrajectory, "trajectory has no keyframes");
  return keyframes.back().time;
}

void validate_trajectory(const Trajectory& traj) {
  if (traj.keyframes.empty()) throw Error(ErrorCode::EmptyTrajectory, "trajectory has no keyframes");
  for (std::size_t i = 0; i < traj.keyframes.size(); ++i) {
    const Keyframe& k = traj.keyframes[i];
    if (!(k.time >= 0.0) || !std::isfinite(k.time)) throw Error(ErrorCode::InvalidArgument, "keyframe time must be >= 0");
    if (i > 0 && !(k.time > traj.keyframes[i - 1].time)) {
      throw Error(ErrorCode::InvalidArgument, "keyframe times must strictly increase");
    }
    if (!is_valid(k.pose)) throw Error(ErrorCode::InvalidArgument, "keyframe " + std::to_string(i) + " has an invalid pose");
  }
}

Quatd slerp(const Quatd& a, const Quatd& b, double u) {
  Quatd qb = b;
  double dot = a.dot(b);
  if (dot < 0.0) {
    qb.coeffs() = -qb.coeffs();
    dot = -dot;
  }
  Quatd out;
  if (dot > 0.9999995) {
    out.coeffs() = a.coeffs() + u * (qb.coeffs() - a.coeffs());
  } else {
    const double theta = std::acos(std::clamp(dot, -1.0, 1.0));
    const double s = std::sin(theta);
    const double wa = std::sin((1.0 - u) * theta) / s;
    const double wb = std::sin(u * theta) / s;
    out.coeffs() = wa * a.coeffs() + wb * qb.coeffs();
  }
  return out.normalized();
}

namespace {

double lerp(double a, double b, double u) { return a + u * (b - a); }

// Barry-Goldman pyramid for centripetal Catmull-Rom on the segment p1 -> p2.
Vec3d centripetal_catmull_rom(const Vec3d& p0, const Vec3d& p1, const Vec3d& p2, const Vec3d& p3, double u) {
  auto knot = [](const Vec3d& a, const Vec3d& b) { return std::sqrt((b - a).norm()); };
  const double t0 = 0.0;
  const double t1 = t0 + knot(p0, p1);
  const double t2 = t1 + knot(p1, p2);
  const double t3 = t2 + knot(p2, p3);
  if (t2 - t1 <= 0.0) return p1;
  const double t = lerp(t1, t2, u);
  // Coincident control points make a knot interval vanish; the blend is then that point.
  auto blend = [](const Vec3d& a, const Vec3d& b, double ta, double tb, double t) -> Vec3d {
    if (tb - ta <= 0.0) return a;
    return ((tb - t) / (tb - ta)) * a + ((t - ta) / (tb - ta)) * b;
  };
  const Vec3d a1 = blend(p0, p1, t0, t1, t);
  const Vec3d a2 = blend(p1, p2, t1, t2, t);
  const Vec3d a3 = blend(p2, p3, t2, t3, t);
  const Vec3d b1 = blend(a1, a2, t0, t2, t);
  const Vec3d b2 = blend(a2, a3, t1, t3, t);
  return blend(b1, b2, t1, t2, t);
}

}  // namespace

CameraPose interpolate(const Trajectory& traj, double t) {
  const auto& keys = traj.keyframes;
  if (keys.empty()) throw Error(ErrorCode::EmptyTrajectory, "trajectory has no keyframes");
  if (keys.size() == 1 || t <= keys.front().time) return keys.front().pose;
  if (t >= keys.back().time) return keys.back().pose;

  // First keyframe with time > t; the segment is [i-1, i].
  const auto it = std::upper_bound(keys.begin(), keys.end(), t, [](double v, const Keyframe& k) { return v < k.time; });
  const std::size_t i = static_cast<std::size_t>(it - keys.begin());
  const Keyframe& k1 = keys[i - 1];
  const Keyframe& k2 = keys[i];
  if (t == k1.time) return k1.pose;
  const double u = (t - k1.time) / (k2.time - k1.time);

  CameraPose out;
  if (traj.mode == InterpolationMode::Linear) {
    out.position = k1.pose.position + u * (k2.pose.position - k1.pose.position);
  } else {
    const Vec3d& p0 = i >= 2 ? keys[i - 2].pose.position : k1.pose.position;
    const Vec3d& p3 = i + 1 < keys.size() ? keys[i + 1].pose.position : k2.pose.position;
    out.position = centripetal_catmull_rom(p0, k1.pose.position, k2.pose.position, p3, u);
  }
  out.orientation = slerp(k1.pose.orientation, k2.pose.orientation, u);
  out.vfov = lerp(k1.pose.vfov, k2.pose.vfov, u);
  out.near = lerp(k1.pose.near, k2.pose.near, u);
  out.far = lerp(k1.pose.far, k2.pose.far, u);
  return out;
}

std::size_t sample_count(double duration, double fps) {
  if (!(fps > 0.0) || !std::isfinite(fps)) throw Error(ErrorCode::InvalidFps, "fps must be positive");
  return static_cast<std::size_t>(std::floor(duration * fps)) + 1;
}

std::vector<CameraPose> sample_uniform(const Trajectory& traj, double fps) {
  if (!(fps > 0.0) || !std::isfinite(fps)) throw Error(ErrorCode::InvalidFps, "fps must be positive");
  const double start = traj.start_time();
  const std::size_t n = sample_count(traj.duration(), fps);
  std::vector<CameraPose> poses;
  poses.reserve(n);
  for (std::size_t k = 0; k < n; ++k) poses.push_back(interpolate(traj, start + static_cast<double>(k) / fps));
  return poses;
}

Trajectory load_trajectory(std::string_view json_text) {
  Trajectory traj;
  try {
    const auto doc = nlohmann::json::parse(json_text);
    const std::string mode = doc.value("mode", std::string("catmull_rom"));
    if (mode == "catmull_rom") {
      traj.mode = InterpolationMode::CatmullRom;
    } else if (mode == "linear") {
      traj.mode = InterpolationMode::Linear;
    } else {
      throw Error(ErrorCode::ParseError, "unknown interpolation mode '" + mode + "'");
    }
    for (const auto& k : doc.at("keyframes")) {
      Keyframe key;
      key.time = k.at("t").get<double>();
      const auto p = k.at("position").get<std::vector<double>>();
      if (p.size() != 3) throw Error(ErrorCode::ParseError, "position needs 3 components");
      key.pose.position = Vec3d(p[0], p[1], p[2]);
      if (k.contains("quaternion")) {
        const auto q = k.at("quaternion").get<std::vector<double>>();
        if (q.size() != 4) throw Error(ErrorCode::ParseError, "quaternion needs 4 components (w,x,y,z)");
        key.pose.orientation = Quatd(q[0], q[1], q[2], q[3]);
        if (!(key.pose.orientation.norm() > 0.0)) throw Error(ErrorCode::ParseError, "zero quaternion");
        key.pose.orientation.normalize();
      }
      if (k.contains("vfov_deg")) key.pose.vfov = k.at("vfov_deg").get<double>() * std::numbers::pi / 180.0;
      if (k.contains("near")) key.pose.near = k.at("near").get<double>();
      if (k.contains("far")) key.pose.far = k.at("far").get<double>();
      traj.keyframes.push_back(key);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("trajectory JSON: ") + e.what());
  }
  validate_trajectory(traj);
  return traj;
}

std::string trajectory_to_json(const Trajectory& traj) {
  nlohmann::json doc;
  doc["mode"] = traj.mode == InterpolationMode::Linear ? "linear" : "catmull_rom";
  auto keys = nlohmann::json::array();
  for (const auto& k : traj.keyframes) {
    const auto& p = k.pose;
    keys.push_back({{"t", k.time},
                    {"position", {p.position.x(), p.position.y(), p.position.z()}},
                    {"quaternion", {p.orientation.w(), p.orientation.x(), p.orientation.y(), p.orientation.z()}},
                    {"vfov_deg", p.vfov * 180.0 / std::numbers::pi},
                    {"near", p.near},
                    {"far", p.far}});
  }
  doc["keyframes"] = std::move(keys);
  return doc.dump(2);
}

}  // namespace splat4d
