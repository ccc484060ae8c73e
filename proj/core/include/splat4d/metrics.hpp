#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "splat4d/foveation.hpp"
#include "splat4d/image.hpp"

namespace splat4d {

/// Sliding-window frame-rate meter. Times are seconds on any monotonic clock.
class FpsMeter {
 public:
  explicit FpsMeter(double window_seconds = 1.0) : window_(window_seconds) {}

  void record(double now);
  /// Completions in (now - window, now] divided by the window length.
  double fps(double now) const;
  double window() const { return window_; }
  std::size_t count() const;

 private:
  double window_;
  mutable std::mutex mutex_;
  std::deque<double> stamps_;
};

/// u.v / (|u||v|). Throws Error(DimMismatch) or Error(ZeroVector).
double cosine(std::span<const float> u, std::span<const float> v);

/// Maps images and text into a shared embedding space; outputs are unit-norm.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<float> embed_image(const Image8& image) = 0;
  virtual std::vector<float> embed_text(const std::string& text) = 0;
};

/// JSON-over-HTTP embedding endpoint. Responses are re-normalized.
std::unique_ptr<EmbeddingProvider> make_http_embedding_provider(const std::string& url,
                                                                std::chrono::milliseconds timeout =
                                                                    std::chrono::milliseconds(5000));
/// Reads EMBEDDING_PROVIDER_URL; null when unset.
std::unique_ptr<EmbeddingProvider> embedding_provider_from_env();

/// Mean cosine between each view and the center view. Throws Error(InvalidArgument) with no views.
double clip_consistency(std::span<const Image8> views, const Image8& center, EmbeddingProvider& provider);
double clip_score(const std::string& prompt, const Image8& image, EmbeddingProvider& provider);

struct EvalReport {
  double cc = 0.0;
  double cs = 0.0;
  double fps_mean = 0.0;
  double fps_min = 0.0;
  double foveated_speedup = 0.0;
};

/// JSON with raw cosines plus cc_x100 / cs_x100 (the x100 convention some reports use).
std::string eval_report_to_json(const EvalReport& report);

struct BenchmarkRow {
  float threshold = 0.0f;
  double foveal_fraction = 0.0;
  double ms_per_frame = 0.0;
  std::uint64_t samples = 0;
};

struct BenchmarkOptions {
  int repetitions = 20;
  int warmup = 3;
};

/// Median timing per threshold using the heuristic map of an unrendered frame. Rows are sorted
/// by foveal fraction (ties by threshold, descending).
std::vector<BenchmarkRow> benchmark_foveation(const SplatCloud& scene, const CameraPose& pose, const RenderConfig& cfg,
                                              const FoveationConfig& base, std::span<const float> thresholds,
                                              const BenchmarkOptions& options = {}, ThreadPool* pool = nullptr);

std::string benchmark_to_json(std::span<const BenchmarkRow> rows, const RenderConfig& cfg, std::size_t splat_count);

}  // namespace splat4d
