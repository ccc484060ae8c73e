#include "splat4d/foveation.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>

#include "splat4d/error.hpp"
#include "splat4d/thread_pool.hpp"

namespace splat4d {

ImportanceMap::ImportanceMap(int rows, int cols, float fill)
    : rows_(rows), cols_(cols), values_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill) {
  if (rows < 0 || cols < 0) throw Error(ErrorCode::InvalidArgument, "importance map dims must be non-negative");
}

ImportanceMap::ImportanceMap(int rows, int cols, std::vector<float> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (rows < 0 || cols < 0 || values_.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    throw Error(ErrorCode::DimMismatch, "importance map values do not match rows x cols");
  }
}

void validate(const FoveationConfig& f) {
  if (!(f.threshold >= 0.0f && f.threshold <= 1.0f)) throw Error(ErrorCode::InvalidArgument, "threshold must be in [0,1]");
  if (f.peripheral_downsample != 2 && f.peripheral_downsample != 4) {
    throw Error(ErrorCode::InvalidArgument, "peripheral_downsample must be 2 or 4");
  }
  if (f.blur_radius < 0) throw Error(ErrorCode::InvalidArgument, "blur_radius must be >= 0");
  if (!(f.temporal_beta >= 0.0f && f.temporal_beta <= 1.0f)) {
    throw Error(ErrorCode::InvalidArgument, "temporal_beta must be in [0,1]");
  }
}

namespace {

constexpr double kCenterSigma = 0.35;

double center_prior(int r, int c, int rows, int cols) {
  const double dx = (c + 0.5) / cols - 0.5;
  const double dy = (r + 0.5) / rows - 0.5;
  return std::exp(-(dx * dx + dy * dy) / (2.0 * kCenterSigma * kCenterSigma));
}

double luminance(const Rgb& p) { return 0.2126 * p.r + 0.7152 * p.g + 0.0722 * p.b; }

// Population standard deviation of luminance per cell; cells split the frame as
// [r*H/rows, (r+1)*H/rows) by integer division.
std::vector<double> cell_contrast(const Framebuffer& frame, int rows, int cols) {
  std::vector<double> stddev(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0);
  const long long h = frame.height();
  const long long w = frame.width();
  for (int r = 0; r < rows; ++r) {
    const int y0 = static_cast<int>(r * h / rows);
    const int y1 = static_cast<int>((r + 1) * h / rows);
    for (int c = 0; c < cols; ++c) {
      const int x0 = static_cast<int>(c * w / cols);
      const int x1 = static_cast<int>((c + 1) * w / cols);
      double sum = 0.0, sum2 = 0.0;
      long long n = 0;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          const double l = luminance(frame.at(x, y));
          sum += l;
          sum2 += l * l;
          ++n;
        }
      }
      if (n > 0) {
        const double mean = sum / static_cast<double>(n);
        stddev[static_cast<std::size_t>(r * cols + c)] = std::sqrt(std::max(0.0, sum2 / static_cast<double>(n) - mean * mean));
      }
    }
  }
  return stddev;
}

}  // namespace

ImportanceMap heuristic_importance(const Framebuffer* frame, int rows, int cols) {
  if (rows < 1 || cols < 1) throw Error(ErrorCode::InvalidArgument, "importance map needs at least 1x1 cells");
  std::vector<double> contrast(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 1.0);
  if (frame != nullptr && frame->width() > 0 && frame->height() > 0) {
    const std::vector<double> sd = cell_contrast(*frame, rows, cols);
    const double max_sd = *std::max_element(sd.begin(), sd.end());
    // A flat frame carries no contrast signal; keep the constant term.
    if (max_sd > 1e-12) {
      for (std::size_t i = 0; i < sd.size(); ++i) contrast[i] = sd[i] / max_sd;
    }
  }
  std::vector<double> raw(contrast.size());
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const std::size_t i = static_cast<std::size_t>(r * cols + c);
      raw[i] = center_prior(r, c, rows, cols) * (0.5 + 0.5 * contrast[i]);
    }
  }
  const double peak = *std::max_element(raw.begin(), raw.end());
  std::vector<float> values(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) values[i] = static_cast<float>(raw[i] / peak);
  return ImportanceMap(rows, cols, std::move(values));
}

ImportanceResult query_provider(const std::vector<std::uint8_t>& png, const std::string& prompt,
                                ImportanceProvider* provider, int rows, int cols, const Framebuffer* frame,
                                const DiagnosticSink& diagnostics) {
  ImportanceResult result;
  if (provider != nullptr) {
    try {
      ImportanceMap map = provider->query(png, prompt, rows, cols);
      if (map.rows() != rows || map.cols() != cols) {
        result.diagnostic = "importance provider returned " + std::to_string(map.rows()) + "x" + std::to_string(map.cols()) +
                            ", expected " + std::to_string(rows) + "x" + std::to_string(cols);
      } else {
        bool finite = true;
        for (float& v : map.values()) {
          if (!std::isfinite(v)) finite = false;
          v = std::clamp(v, 0.0f, 1.0f);
        }
        if (finite) {
          result.map = std::move(map);
          result.source = ImportanceSource::Provider;
          return result;
        }
        result.diagnostic = "importance provider returned non-finite values";
      }
    } catch (const std::exception& e) {
      result.diagnostic = std::string("importance provider failed: ") + e.what();
    }
    if (diagnostics) diagnostics(result.diagnostic);
  }
  result.map = heuristic_importance(frame, rows, cols);
  result.source = ImportanceSource::Heuristic;
  return result;
}

ImportanceMap smooth_map(const ImportanceMap& previous, const ImportanceMap& current, float beta) {
  if (!previous.same_dims(current)) throw Error(ErrorCode::DimMismatch, "smooth_map: maps differ in size");
  std::vector<float> out(current.values().size());
  const auto prev = previous.values();
  const auto cur = current.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = beta * prev[i] + (1.0f - beta) * cur[i];
  return ImportanceMap(current.rows(), current.cols(), std::move(out));
}

std::vector<TileClass> classify_tiles(const ImportanceMap& map, float threshold) {
  const auto values = map.values();
  std::vector<TileClass> classes(values.size(), TileClass::Peripheral);
  bool any = false;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] >= threshold) {
      classes[i] = TileClass::Foveal;
      any = true;
    }
  }
  if (!any && !values.empty()) {
    const auto best = std::max_element(values.begin(), values.end());  // first maximum
    classes[static_cast<std::size_t>(best - values.begin())] = TileClass::Foveal;
  }
  return classes;
}

CostReport cost_report(const FoveatedStats& stats) {
  CostReport report;
  report.foveal_fraction = stats.total_tiles > 0 ? static_cast<double>(stats.foveal_tiles) / stats.total_tiles : 0.0;
  report.composite_samples = stats.composite_samples;
  report.elapsed_ms = stats.elapsed_ms;
  return report;
}

namespace {

struct LowResGrid {
  int width = 0;
  int height = 0;
  std::vector<Rgb> color;
  std::vector<float> transmittance;
  std::vector<std::uint8_t> valid;

  std::size_t index(int gx, int gy) const { return static_cast<std::size_t>(gy) * static_cast<std::size_t>(width) + static_cast<std::size_t>(gx); }
  bool has(int gx, int gy) const { return gx < width && gy < height && valid[index(gx, gy)] != 0; }
};

Rgb lerp(const Rgb& a, const Rgb& b, float t) {
  return {a.r + t * (b.r - a.r), a.g + t * (b.g - a.g), a.b + t * (b.b - a.b)};
}

float lerpf(float a, float b, float t) { return a + t * (b - a); }

// Box blur along one line of pixels. `mask` marks peripheral pixels; each maximal peripheral run
// is blurred independently with indices clamped to the run, so values never cross into foveal
// pixels and the window always holds 2r+1 taps.
void blur_line(std::span<Rgb*> line, std::span<const std::uint8_t> mask, int radius, std::vector<double>& prefix) {
  const int n = static_cast<int>(line.size());
  int a = 0;
  while (a < n) {
    if (mask[static_cast<std::size_t>(a)] == 0) {
      ++a;
      continue;
    }
    int b = a;
    while (b + 1 < n && mask[static_cast<std::size_t>(b + 1)] != 0) ++b;
    const int len = b - a + 1;
    if (len > 1) {
      prefix.assign(static_cast<std::size_t>(len + 1) * 3, 0.0);
      for (int i = 0; i < len; ++i) {
        const Rgb& p = *line[static_cast<std::size_t>(a + i)];
        const std::size_t k = static_cast<std::size_t>(i + 1) * 3;
        prefix[k + 0] = prefix[k - 3] + p.r;
        prefix[k + 1] = prefix[k - 2] + p.g;
        prefix[k + 2] = prefix[k - 1] + p.b;
      }
      const Rgb first = *line[static_cast<std::size_t>(a)];
      const Rgb last = *line[static_cast<std::size_t>(b)];
      const double taps = 2.0 * radius + 1.0;
      std::vector<Rgb> out(static_cast<std::size_t>(len));
      for (int i = 0; i < len; ++i) {
        const int lo = i - radius;
        const int hi = i + radius;
        const int below = std::max(0, -lo);
        const int above = std::max(0, hi - (len - 1));
        const int clo = std::max(lo, 0);
        const int chi = std::min(hi, len - 1);
        const std::size_t kh = static_cast<std::size_t>(chi + 1) * 3;
        const std::size_t kl = static_cast<std::size_t>(clo) * 3;
        const double r = prefix[kh + 0] - prefix[kl + 0] + below * static_cast<double>(first.r) + above * static_cast<double>(last.r);
        const double g = prefix[kh + 1] - prefix[kl + 1] + below * static_cast<double>(first.g) + above * static_cast<double>(last.g);
        const double bl = prefix[kh + 2] - prefix[kl + 2] + below * static_cast<double>(first.b) + above * static_cast<double>(last.b);
        out[static_cast<std::size_t>(i)] = {static_cast<float>(r / taps), static_cast<float>(g / taps), static_cast<float>(bl / taps)};
      }
      for (int i = 0; i < len; ++i) *line[static_cast<std::size_t>(a + i)] = out[static_cast<std::size_t>(i)];
    }
    a = b + 1;
  }
}

}  // namespace

Framebuffer render_foveated(const SplatCloud& cloud, const CameraPose& pose, const ImportanceMap& map,
                            const RenderConfig& cfg, const FoveationConfig& fcfg, ThreadPool* pool, FoveatedStats* stats) {
  if (map.rows() != cfg.tiles_y() || map.cols() != cfg.tiles_x()) {
    throw Error(ErrorCode::DimMismatch, "importance map is " + std::to_string(map.rows()) + "x" + std::to_string(map.cols()) +
                                            ", tile grid is " + std::to_string(cfg.tiles_y()) + "x" + std::to_string(cfg.tiles_x()));
  }
  const std::vector<TileClass> classes =
      fcfg.enabled ? classify_tiles(map, fcfg.threshold)
                   : std::vector<TileClass>(static_cast<std::size_t>(cfg.tile_count()), TileClass::Foveal);
  return render_foveated(cloud, pose, classes, cfg, fcfg, pool, stats);
}

Framebuffer render_foveated(const SplatCloud& cloud, const CameraPose& pose, std::span<const TileClass> classes,
                            const RenderConfig& cfg, const FoveationConfig& fcfg, ThreadPool* pool, FoveatedStats* stats) {
  const auto started = std::chrono::steady_clock::now();
  validate(cfg);
  validate(fcfg);
  if (classes.size() != static_cast<std::size_t>(cfg.tile_count())) {
    throw Error(ErrorCode::DimMismatch, "tile class grid does not match the render tile grid");
  }
  const int k = fcfg.peripheral_downsample;
  if (cfg.tile_size % k != 0) throw Error(ErrorCode::InvalidArgument, "tile_size must be a multiple of peripheral_downsample");

  const PreparedFrame frame = prepare_frame(cloud, pose, cfg);
  Framebuffer fb(cfg.width, cfg.height);
  const int tiles_x = cfg.tiles_x();

  LowResGrid low;
  low.width = (cfg.width + k - 1) / k;
  low.height = (cfg.height + k - 1) / k;
  const std::size_t low_size = static_cast<std::size_t>(low.width) * static_cast<std::size_t>(low.height);
  low.color.assign(low_size, Rgb{});
  low.transmittance.assign(low_size, 1.0f);
  low.valid.assign(low_size, 0);

  std::vector<std::uint64_t> samples(classes.size(), 0);
  ThreadPool& workers = pool != nullptr ? *pool : default_thread_pool();

  // Pass 1: full tiles, and the subsampled lattice of peripheral tiles.
  workers.parallel_for(classes.size(), [&](std::size_t t) {
    const int tile = static_cast<int>(t);
    if (classes[t] == TileClass::Foveal) {
      samples[t] = render_tile_full(frame, tile, cfg, fb);
      return;
    }
    const int x0 = (tile % tiles_x) * cfg.tile_size;
    const int y0 = (tile / tiles_x) * cfg.tile_size;
    const int x1 = std::min(x0 + cfg.tile_size, cfg.width);
    const int y1 = std::min(y0 + cfg.tile_size, cfg.height);
    const auto& list = frame.tiles[t];
    std::uint64_t n = 0;
    std::vector<PixelResult> row(static_cast<std::size_t>((x1 - x0 + k - 1) / k));
    for (int y = y0; y < y1; y += k) {
      composite_row(frame.projected, list, y, x0, x1, k, cfg, row.data());
      for (int x = x0; x < x1; x += k) {
        const PixelResult& px = row[static_cast<std::size_t>((x - x0) / k)];
        const std::size_t li = low.index(x / k, y / k);
        low.color[li] = px.color;
        low.transmittance[li] = px.transmittance;
        low.valid[li] = 1;
        ++n;
      }
    }
    samples[t] = n;
  });

  const bool any_peripheral = std::find(classes.begin(), classes.end(), TileClass::Peripheral) != classes.end();

  // Pass 2: bilinear upsample inside peripheral tiles. Missing neighbours (outside the image or
  // in a foveal tile) clamp to the available sample.
  std::vector<std::uint8_t> peripheral(static_cast<std::size_t>(cfg.width) * static_cast<std::size_t>(cfg.height), 0);
  if (any_peripheral) workers.parallel_for(classes.size(), [&](std::size_t t) {
    if (classes[t] == TileClass::Foveal) return;
    const int tile = static_cast<int>(t);
    const int x0 = (tile % tiles_x) * cfg.tile_size;
    const int y0 = (tile / tiles_x) * cfg.tile_size;
    const int x1 = std::min(x0 + cfg.tile_size, cfg.width);
    const int y1 = std::min(y0 + cfg.tile_size, cfg.height);
    for (int y = y0; y < y1; ++y) {
      const int gy0 = y / k;
      const float fy = static_cast<float>(y - gy0 * k) / static_cast<float>(k);
      for (int x = x0; x < x1; ++x) {
        const int gx0 = x / k;
        const float fx = static_cast<float>(x - gx0 * k) / static_cast<float>(k);
        const std::size_t i00 = low.index(gx0, gy0);
        const std::size_t i10 = low.has(gx0 + 1, gy0) ? low.index(gx0 + 1, gy0) : i00;
        Rgb color = lerp(low.color[i00], low.color[i10], fx);
        float trans = lerpf(low.transmittance[i00], low.transmittance[i10], fx);
        if (low.has(gx0, gy0 + 1)) {
          const std::size_t i01 = low.index(gx0, gy0 + 1);
          const std::size_t i11 = low.has(gx0 + 1, gy0 + 1) ? low.index(gx0 + 1, gy0 + 1) : i01;
          const Rgb below = lerp(low.color[i01], low.color[i11], fx);
          const float tb = lerpf(low.transmittance[i01], low.transmittance[i11], fx);
          color = lerp(color, below, fy);
          trans = lerpf(trans, tb, fy);
        }
        fb.at(x, y) = color;
        fb.transmittance(x, y) = trans;
        peripheral[static_cast<std::size_t>(y) * static_cast<std::size_t>(cfg.width) + static_cast<std::size_t>(x)] = 1;
      }
    }
  });

  // Pass 3: separable box blur restricted to peripheral runs.
  if (fcfg.blur_radius > 0 && any_peripheral) {
    workers.parallel_for(static_cast<std::size_t>(cfg.height), [&](std::size_t y) {
      std::vector<Rgb*> line(static_cast<std::size_t>(cfg.width));
      for (int x = 0; x < cfg.width; ++x) line[static_cast<std::size_t>(x)] = &fb.at(x, static_cast<int>(y));
      std::vector<double> prefix;
      blur_line(line, std::span<const std::uint8_t>(peripheral).subspan(y * static_cast<std::size_t>(cfg.width), static_cast<std::size_t>(cfg.width)),
                fcfg.blur_radius, prefix);
    });
    workers.parallel_for(static_cast<std::size_t>(cfg.width), [&](std::size_t x) {
      std::vector<Rgb*> line(static_cast<std::size_t>(cfg.height));
      std::vector<std::uint8_t> mask(static_cast<std::size_t>(cfg.height));
      for (int y = 0; y < cfg.height; ++y) {
        line[static_cast<std::size_t>(y)] = &fb.at(static_cast<int>(x), y);
        mask[static_cast<std::size_t>(y)] = peripheral[static_cast<std::size_t>(y) * static_cast<std::size_t>(cfg.width) + x];
      }
      std::vector<double> prefix;
      blur_line(line, mask, fcfg.blur_radius, prefix);
    });
  }

  if (stats != nullptr) {
    stats->composite_samples = 0;
    for (auto n : samples) stats->composite_samples += n;
    stats->full_resolution_samples = static_cast<std::uint64_t>(cfg.width) * static_cast<std::uint64_t>(cfg.height);
    stats->foveal_tiles = static_cast<int>(std::count(classes.begin(), classes.end(), TileClass::Foveal));
    stats->total_tiles = static_cast<int>(classes.size());
    stats->elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  }
  return fb;
}

}  // namespace splat4d
