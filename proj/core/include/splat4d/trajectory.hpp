#pragma once

#include <string_view>
#include <vector>

#include "splat4d/camera.hpp"

namespace splat4d {

struct Keyframe {
  CameraPose pose;
  double time = 0.0;
};

enum class InterpolationMode { Linear, CatmullRom };

/// Keyframes sorted by strictly increasing time.
struct Trajectory {
  std::vector<Keyframe> keyframes;
  InterpolationMode mode = InterpolationMode::CatmullRom;

  double start_time() const;
  double end_time() const;
  double duration() const { return end_time() - start_time(); }
};

/// Throws Error(EmptyTrajectory) or Error(InvalidArgument) for unsorted keyframes.
void validate_trajectory(const Trajectory& traj);

/// Shortest-arc spherical interpolation; result is unit length.
Quatd slerp(const Quatd& a, const Quatd& b, double u);

/// Pose at time t (clamped to the keyframe range). Position follows centripetal Catmull-Rom
/// (or piecewise-linear), orientation slerps between the bracketing keyframes, vfov/near/far are
/// linear. At a keyframe time the keyframe pose is returned unchanged.
CameraPose interpolate(const Trajectory& traj, double t);

/// Poses at start + k/fps for k = 0..floor(duration * fps). Throws Error(InvalidFps) for fps <= 0.
std::vector<CameraPose> sample_uniform(const Trajectory& traj, double fps);

/// Number of poses sample_uniform returns for a given duration.
std::size_t sample_count(double duration, double fps);

/// `{ "mode": "catmull_rom"|"linear", "keyframes": [{ "t", "position", "quaternion", "vfov_deg",
/// "near", "far" }] }`. Throws Error(ParseError) on malformed input.
Trajectory load_trajectory(std::string_view json_text);
std::string trajectory_to_json(const Trajectory& traj);

}  // namespace splat4d
