#include "splat4d/synthetic.hpp"

#include <random>

namespace splat4d {

SplatCloud make_synthetic_scene(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> ux(-5.2f, 5.2f);
  std::uniform_real_distribution<float> uy(-2.9f, 2.9f);
  std::uniform_real_distribution<float> uz(-1.0f, 1.0f);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  std::normal_distribution<float> gauss(0.0f, 1.0f);
  std::vector<Splat> splats(count);
  for (Splat& s : splats) {
    s.position = Vec3f(ux(rng), uy(rng), uz(rng));
    Quatf q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
    if (q.norm() < 1e-6f) q = Quatf::Identity();
    s.rotation = q.normalized();
    const float base = 0.02f + 0.03f * unit(rng);
    s.scale = Vec3f(base * (0.5f + unit(rng)), base * (0.5f + unit(rng)), base * (0.5f + unit(rng)));
    s.opacity = 0.3f + 0.6f * unit(rng);
    s.color = {unit(rng), unit(rng), unit(rng)};
  }
  return SplatCloud(std::move(splats));
}

CameraPose synthetic_camera() { return look_at(Vec3d(0, 0, 5), Vec3d::Zero(), Vec3d(0, 1, 0)); }

}  // namespace splat4d
