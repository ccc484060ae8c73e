#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "splat4d/image.hpp"
#include "splat4d/rasterizer.hpp"

namespace splat4d {

/// Row-major saliency grid in [0,1], one cell per render tile.
class ImportanceMap {
 public:
  ImportanceMap() = default;
  ImportanceMap(int rows, int cols, float fill = 0.0f);
  ImportanceMap(int rows, int cols, std::vector<float> values);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  float& at(int r, int c) { return values_[static_cast<std::size_t>(r * cols_ + c)]; }
  float at(int r, int c) const { return values_[static_cast<std::size_t>(r * cols_ + c)]; }
  std::span<const float> values() const { return values_; }
  std::span<float> values() { return values_; }
  bool same_dims(const ImportanceMap& other) const { return rows_ == other.rows_ && cols_ == other.cols_; }

  bool operator==(const ImportanceMap&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<float> values_;
};

struct FoveationConfig {
  float threshold = 0.5f;
  /// Peripheral subsampling factor per axis; 2 or 4.
  int peripheral_downsample = 4;
  int blur_radius = 4;
  float temporal_beta = 0.7f;
  bool enabled = true;
};

/// Throws Error(InvalidArgument) if any field is outside its documented range.
void validate(const FoveationConfig& fcfg);

/// Gaussian center prior (sigma 0.35 in normalized grid units) weighted by per-cell luminance
/// contrast, normalized so the maximum is 1. A null or flat frame yields the bare center prior.
ImportanceMap heuristic_importance(const Framebuffer* frame, int rows, int cols);

/// Source of a semantic importance map for one frame.
class ImportanceProvider {
 public:
  virtual ~ImportanceProvider() = default;
  /// Returns a rows x cols map or throws. Implementations should honor timeout().
  virtual ImportanceMap query(const std::vector<std::uint8_t>& png, const std::string& prompt, int rows, int cols) = 0;
  virtual std::chrono::milliseconds timeout() const { return std::chrono::milliseconds(2000); }
};

enum class ImportanceSource { Heuristic, Provider };

struct ImportanceResult {
  ImportanceMap map;
  ImportanceSource source = ImportanceSource::Heuristic;
  /// Why the provider result was rejected, empty when it was used or absent.
  std::string diagnostic;
};

using DiagnosticSink = std::function<void(const std::string&)>;

/// Never throws: provider failures, wrong dims and a null provider fall back to the heuristic.
/// `frame` feeds the heuristic's contrast term and may be null.
ImportanceResult query_provider(const std::vector<std::uint8_t>& png, const std::string& prompt,
                                ImportanceProvider* provider, int rows, int cols, const Framebuffer* frame = nullptr,
                                const DiagnosticSink& diagnostics = {});

/// Provider speaking the JSON-over-HTTP importance protocol.
std::unique_ptr<ImportanceProvider> make_http_importance_provider(const std::string& url,
                                                                  std::chrono::milliseconds timeout =
                                                                      std::chrono::milliseconds(2000));
/// Reads IMPORTANCE_PROVIDER_URL; null when unset or empty.
std::unique_ptr<ImportanceProvider> importance_provider_from_env();

/// beta * previous + (1 - beta) * current. Throws Error(DimMismatch).
ImportanceMap smooth_map(const ImportanceMap& previous, const ImportanceMap& current, float beta);

enum class TileClass : std::uint8_t { Peripheral = 0, Foveal = 1 };

/// Foveal iff value >= threshold; if nothing qualifies the first argmax cell is foveal.
std::vector<TileClass> classify_tiles(const ImportanceMap& map, float threshold);

struct FoveatedStats {
  std::uint64_t composite_samples = 0;
  std::uint64_t full_resolution_samples = 0;
  int foveal_tiles = 0;
  int total_tiles = 0;
  double elapsed_ms = 0.0;
};

struct CostReport {
  double foveal_fraction = 0.0;
  std::uint64_t composite_samples = 0;
  double elapsed_ms = 0.0;
};

CostReport cost_report(const FoveatedStats& stats);

/// Foveal tiles render exactly as render_tiled. Peripheral tiles are sampled every k-th pixel,
/// bilinearly upsampled and box-blurred, both confined to the peripheral region.
/// Throws Error(DimMismatch) if the map is not the tile grid of cfg.
Framebuffer render_foveated(const SplatCloud& cloud, const CameraPose& pose, const ImportanceMap& map,
                            const RenderConfig& cfg, const FoveationConfig& fcfg, ThreadPool* pool = nullptr,
                            FoveatedStats* stats = nullptr);

/// Variant with precomputed tile classes (row-major, cfg.tile_count() entries).
Framebuffer render_foveated(const SplatCloud& cloud, const CameraPose& pose, std::span<const TileClass> classes,
                            const RenderConfig& cfg, const FoveationConfig& fcfg, ThreadPool* pool = nullptr,
                            FoveatedStats* stats = nullptr);

}  // namespace splat4d
