#include "splat4d/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "splat4d/error.hpp"

namespace splat4d {

void FpsMeter::record(double now) {
  std::lock_guard lock(mutex_);
  stamps_.push_back(now);
  while (!stamps_.empty() && stamps_.front() <= now - window_) stamps_.pop_front();
}

double FpsMeter::fps(double now) const {
  std::lock_guard lock(mutex_);
  const auto n = std::count_if(stamps_.begin(), stamps_.end(), [&](double t) { return t > now - window_ && t <= now; });
  return static_cast<double>(n) / window_;
}

std::size_t FpsMeter::count() const {
  std::lock_guard lock(mutex_);
  return stamps_.size();
}

double cosine(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size()) throw Error(ErrorCode::DimMismatch, "cosine: vectors differ in dimension");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += static_cast<double>(u[i]) * v[i];
    nu += static_cast<double>(u[i]) * u[i];
    nv += static_cast<double>(v[i]) * v[i];
  }
  if (nu == 0.0 || nv == 0.0) throw Error(ErrorCode::ZeroVector, "cosine of a zero vector");
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

double clip_consistency(std::span<const Image8> views, const Image8& center, EmbeddingProvider& provider) {
  if (views.empty()) throw Error(ErrorCode::InvalidArgument, "clip_consistency needs at least one view");
  const std::vector<float> ref = provider.embed_image(center);
  double sum = 0.0;
  for (const Image8& view : views) sum += cosine(provider.embed_image(view), ref);
  return sum / static_cast<double>(views.size());
}

double clip_score(const std::string& prompt, const Image8& image, EmbeddingProvider& provider) {
  return cosine(provider.embed_text(prompt), provider.embed_image(image));
}

std::string eval_report_to_json(const EvalReport& r) {
  const nlohmann::json doc{{"cc", r.cc},
                           {"cs", r.cs},
                           {"cc_x100", r.cc * 100.0},
                           {"cs_x100", r.cs * 100.0},
                           {"fps_mean", r.fps_mean},
                           {"fps_min", r.fps_min},
                           {"foveated_speedup", r.foveated_speedup}};
  return doc.dump(2);
}

std::vector<BenchmarkRow> benchmark_foveation(const SplatCloud& scene, const CameraPose& pose, const RenderConfig& cfg,
                                              const FoveationConfig& base, std::span<const float> thresholds,
                                              const BenchmarkOptions& options, ThreadPool* pool) {
  validate(cfg);
  const ImportanceMap map = heuristic_importance(nullptr, cfg.tiles_y(), cfg.tiles_x());
  std::vector<BenchmarkRow> rows;
  for (const float tau : thresholds) {
    FoveationConfig fcfg = base;
    fcfg.threshold = tau;
    fcfg.enabled = true;
    const std::vector<TileClass> classes = classify_tiles(map, tau);
    std::vector<double> times;
    FoveatedStats stats;
    const int total = std::max(options.repetitions, options.warmup + 1);
    for (int rep = 0; rep < total; ++rep) {
      render_foveated(scene, pose, classes, cfg, fcfg, pool, &stats);
      if (rep >= options.warmup) times.push_back(stats.elapsed_ms);
    }
    std::sort(times.begin(), times.end());
    const std::size_t n = times.size();
    const double median = n % 2 == 1 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
    const CostReport cost = cost_report(stats);
    rows.push_back({tau, cost.foveal_fraction, median, cost.composite_samples});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const BenchmarkRow& a, const BenchmarkRow& b) {
    if (a.foveal_fraction != b.foveal_fraction) return a.foveal_fraction < b.foveal_fraction;
    return a.threshold > b.threshold;
  });
  return rows;
}

std::string benchmark_to_json(std::span<const BenchmarkRow> rows, const RenderConfig& cfg, std::size_t splat_count) {
  nlohmann::json doc;
  doc["width"] = cfg.width;
  doc["height"] = cfg.height;
  doc["tile_size"] = cfg.tile_size;
  doc["splats"] = splat_count;
  auto arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"tau", r.threshold},
                   {"foveal_fraction", r.foveal_fraction},
                   {"ms_per_frame", r.ms_per_frame},
                   {"samples", r.samples}});
  }
  doc["rows"] = std::move(arr);
  return doc.dump(2);
}

}  // namespace splat4d
