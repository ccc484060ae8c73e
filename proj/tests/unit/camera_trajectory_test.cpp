#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "splat4d/camera.hpp"
#include "splat4d/error.hpp"
#include "splat4d/trajectory.hpp"

using namespace splat4d;
using namespace splat4d::testing;

namespace {

CameraPose pose_at(const Vec3d& p, const Quatd& q, double vfov = std::numbers::pi / 3) {
  CameraPose c;
  c.position = p;
  c.orientation = q;
  c.vfov = vfov;
  return c;
}

Trajectory random_trajectory(Rng& rng, int keys, InterpolationMode mode) {
  std::uniform_real_distribution<double> u(-3, 3);
  std::uniform_real_distribution<double> dt(0.1, 1.5);
  Trajectory traj;
  traj.mode = mode;
  double t = u(rng);
  for (int k = 0; k < keys; ++k) {
    CameraPose p = pose_at(Vec3d(u(rng), u(rng), u(rng)), random_unit_quat(rng), 0.5 + 0.1 * k);
    p.near = 0.01 * (k + 1);
    p.far = 100.0 + k;
    traj.keyframes.push_back({p, t});
    t += dt(rng);
  }
  return traj;
}

}  // namespace

TEST(Camera, LookAtCanonical) {
  const CameraPose p = look_at(Vec3d(0, 0, 5), Vec3d::Zero(), Vec3d(0, 1, 0));
  EXPECT_NEAR(std::abs(p.orientation.w()), 1.0, 1e-12);
  EXPECT_NEAR(p.orientation.vec().norm(), 0.0, 1e-12);
  EXPECT_EQ(p.position, Vec3d(0, 0, 5));
  EXPECT_NEAR(p.vfov, std::numbers::pi / 3, 1e-15);
}

TEST(Camera, LookAtFromPlusX) {
  const CameraPose p = look_at(Vec3d(5, 0, 0), Vec3d::Zero(), Vec3d(0, 1, 0));
  // Hand-derived: camera -z must map to world -x, so R = rot_y(+90 deg).
  const Quatd expected(std::cos(std::numbers::pi / 4), 0, std::sin(std::numbers::pi / 4), 0);
  EXPECT_NEAR(std::abs(p.orientation.dot(expected)), 1.0, 1e-12);
  const Vec3d forward = p.orientation * Vec3d(0, 0, -1);
  EXPECT_NEAR((forward - Vec3d(-1, 0, 0)).norm(), 0.0, 1e-12);
}

TEST(Camera, LookAtDegenerate) {
  EXPECT_THROW(look_at(Vec3d(1, 1, 1), Vec3d(1, 1, 1), Vec3d(0, 1, 0)), Error);
  EXPECT_THROW(look_at(Vec3d(0, 5, 0), Vec3d::Zero(), Vec3d(0, 1, 0)), Error);
}

TEST(Camera, ViewTransformExamples) {
  EXPECT_TRUE(view_transform(CameraPose{}).isApprox(Mat4d::Identity(), 1e-15));
  const Mat4d v = view_transform(pose_at(Vec3d(0, 0, 5), Quatd::Identity()));
  Mat4d expected = Mat4d::Identity();
  expected(2, 3) = -5.0;
  EXPECT_TRUE(v.isApprox(expected, 1e-15));
}

TEST(Camera, ViewInvertsCameraToWorld) {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    std::uniform_real_distribution<double> u(-10, 10);
    const CameraPose p = pose_at(Vec3d(u(rng), u(rng), u(rng)), random_unit_quat(rng));
    const Mat4d prod = view_transform(p) * camera_to_world(p);
    EXPECT_LE((prod - Mat4d::Identity()).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Camera, FocalLength) {
  CameraPose p;
  p.vfov = 2.0 * std::atan(1.0);  // 90 degrees
  EXPECT_NEAR(focal_length_px(p, 200), 100.0, 1e-12);
}

TEST(Trajectory, LinearMidpoint) {
  Trajectory traj;
  traj.mode = InterpolationMode::Linear;
  traj.keyframes = {{pose_at(Vec3d(0, 0, 0), Quatd::Identity()), 0.0}, {pose_at(Vec3d(2, 0, 0), Quatd::Identity()), 1.0}};
  const CameraPose mid = interpolate(traj, 0.5);
  EXPECT_NEAR((mid.position - Vec3d(1, 0, 0)).norm(), 0.0, 1e-12);
}

TEST(Trajectory, SlerpHalfAngle) {
  const Quatd b(Eigen::AngleAxisd(std::numbers::pi / 2, Vec3d::UnitZ()));
  const Quatd q = slerp(Quatd::Identity(), b, 0.5);
  EXPECT_NEAR(q.w(), 0.9238795, 1e-6);
  EXPECT_NEAR(q.x(), 0.0, 1e-6);
  EXPECT_NEAR(q.y(), 0.0, 1e-6);
  EXPECT_NEAR(q.z(), 0.3826834, 1e-6);

  Trajectory traj;
  traj.keyframes = {{pose_at(Vec3d::Zero(), Quatd::Identity()), 0.0}, {pose_at(Vec3d::Zero(), b), 1.0}};
  const Quatd via = interpolate(traj, 0.5).orientation;
  EXPECT_NEAR(via.w(), 0.9238795, 1e-6);
  EXPECT_NEAR(via.z(), 0.3826834, 1e-6);
}

TEST(Trajectory, SlerpTakesShortestArc) {
  const Quatd a = Quatd::Identity();
  const Quatd b(-std::cos(0.1), 0, 0, -std::sin(0.1));  // same rotation as (cos, 0, 0, sin)
  const Quatd q = slerp(a, b, 0.5);
  const Quatd expected(std::cos(0.05), 0, 0, std::sin(0.05));
  EXPECT_NEAR(std::abs(q.dot(expected)), 1.0, 1e-12);
}

TEST(Trajectory, SingleKeyframeIsConstant) {
  Trajectory traj;
  const CameraPose p = pose_at(Vec3d(1, 2, 3), Quatd(Eigen::AngleAxisd(0.3, Vec3d::UnitX())));
  traj.keyframes = {{p, 2.0}};
  for (double t : {-5.0, 2.0, 7.0}) {
    const CameraPose q = interpolate(traj, t);
    EXPECT_EQ(q.position, p.position);
    EXPECT_EQ(q.orientation.coeffs(), p.orientation.coeffs());
  }
  EXPECT_EQ(sample_uniform(traj, 30).size(), 1u);
}

TEST(Trajectory, KnotExactness) {
  Rng rng(11);
  for (auto mode : {InterpolationMode::Linear, InterpolationMode::CatmullRom}) {
    for (int trial = 0; trial < 20; ++trial) {
      const Trajectory traj = random_trajectory(rng, 2 + trial % 6, mode);
      for (const Keyframe& k : traj.keyframes) {
        const CameraPose p = interpolate(traj, k.time);
        EXPECT_EQ(p.position, k.pose.position);
        EXPECT_EQ(p.orientation.coeffs(), k.pose.orientation.coeffs());
        EXPECT_EQ(p.vfov, k.pose.vfov);
        EXPECT_EQ(p.near, k.pose.near);
        EXPECT_EQ(p.far, k.pose.far);
      }
    }
  }
}

TEST(Trajectory, UnitQuaternionsOverManySamples) {
  Rng rng(12);
  const Trajectory traj = random_trajectory(rng, 7, InterpolationMode::CatmullRom);
  const double t0 = traj.start_time(), t1 = traj.end_time();
  for (int i = 0; i < 10000; ++i) {
    const double t = t0 + (t1 - t0) * i / 9999.0;
    ASSERT_NEAR(interpolate(traj, t).orientation.norm(), 1.0, 1e-6);
  }
}

TEST(Trajectory, Continuity) {
  Rng rng(13);
  const Trajectory traj = random_trajectory(rng, 6, InterpolationMode::CatmullRom);
  const double t0 = traj.start_time(), t1 = traj.end_time();
  // Largest step between consecutive samples; halves when the sampling doubles.
  const auto max_step = [&](int n) {
    double worst = 0.0;
    Vec3d prev = interpolate(traj, t0).position;
    for (int i = 1; i <= n; ++i) {
      const Vec3d p = interpolate(traj, t0 + (t1 - t0) * i / n).position;
      worst = std::max(worst, (p - prev).norm());
      prev = p;
    }
    return worst;
  };
  const double coarse = max_step(5000);
  const double fine = max_step(10000);
  EXPECT_GT(coarse, 0.0);
  EXPECT_LE(fine, coarse * 0.55);
}

TEST(Trajectory, SampleCounts) {
  Trajectory traj = orbit_trajectory(1.0);
  EXPECT_EQ(sample_uniform(traj, 30).size(), 31u);
  traj = orbit_trajectory(0.5);
  const auto poses = sample_uniform(traj, 30);
  ASSERT_EQ(poses.size(), 16u);
  EXPECT_LE((poses.back().position - interpolate(traj, 0.5).position).norm(), 1e-12);
  EXPECT_EQ(sample_count(0.0, 30.0), 1u);
  EXPECT_THROW(sample_uniform(traj, 0.0), Error);
  EXPECT_THROW(sample_uniform(traj, -1.0), Error);
}

TEST(Trajectory, Validation) {
  Trajectory empty;
  EXPECT_THROW(interpolate(empty, 0.0), Error);
  EXPECT_THROW(validate_trajectory(empty), Error);
  Trajectory unsorted = orbit_trajectory(1.0);
  std::swap(unsorted.keyframes[0], unsorted.keyframes[1]);
  EXPECT_THROW(validate_trajectory(unsorted), Error);
}

TEST(Trajectory, JsonRoundTrip) {
  Rng rng(14);
  const Trajectory traj = random_trajectory(rng, 4, InterpolationMode::CatmullRom);
  const Trajectory back = load_trajectory(trajectory_to_json(traj));
  ASSERT_EQ(back.keyframes.size(), traj.keyframes.size());
  EXPECT_EQ(back.mode, traj.mode);
  for (std::size_t i = 0; i < traj.keyframes.size(); ++i) {
    EXPECT_NEAR(back.keyframes[i].time, traj.keyframes[i].time, 1e-12);
    EXPECT_NEAR((back.keyframes[i].pose.position - traj.keyframes[i].pose.position).norm(), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(back.keyframes[i].pose.orientation.dot(traj.keyframes[i].pose.orientation)), 1.0, 1e-12);
    EXPECT_NEAR(back.keyframes[i].pose.vfov, traj.keyframes[i].pose.vfov, 1e-12);
  }
  EXPECT_THROW(load_trajectory("{\"keyframes\": 3}"), Error);
}
