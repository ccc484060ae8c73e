#include "splat4d/video_export.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "splat4d/error.hpp"
#include "splat4d/image.hpp"
#include "splat4d/sequence_player.hpp"

namespace splat4d {

std::vector<CameraPose> smooth_poses(std::span<const CameraPose> poses, float alpha) {
  if (!(alpha > 0.0f && alpha <= 1.0f)) throw Error(ErrorCode::InvalidArgument, "smoothing alpha must be in (0,1]");
  std::vector<CameraPose> out(poses.begin(), poses.end());
  if (alpha == 1.0f) return out;
  const double a = alpha;
  for (std::size_t k = 1; k < out.size(); ++k) {
    const CameraPose& prev = out[k - 1];
    const CameraPose& in = poses[k];
    CameraPose& o = out[k];
    o.position = a * in.position + (1.0 - a) * prev.position;
    o.orientation = slerp(prev.orientation, in.orientation, a);
    o.vfov = a * in.vfov + (1.0 - a) * prev.vfov;
    o.near = a * in.near + (1.0 - a) * prev.near;
    o.far = a * in.far + (1.0 - a) * prev.far;
  }
  return out;
}

double sequence_time_for(const Trajectory& traj, const SequenceManifest& manifest, double trajectory_time) {
  return std::clamp(trajectory_time - traj.start_time(), 0.0, manifest.duration);
}

ExportResult run_export(const ExportJob& job) {
  validate_trajectory(job.trajectory);
  if (!(job.fps > 0.0) || !std::isfinite(job.fps)) throw Error(ErrorCode::InvalidFps, "export fps must be positive");
  validate(job.render);
  if (job.foveation.enabled) validate(job.foveation);
  validate_manifest(job.manifest);
  if (job.sink == nullptr) throw Error(ErrorCode::InvalidArgument, "export job has no sink");
  if (!job.load_frame) throw Error(ErrorCode::InvalidArgument, "export job has no frame loader");

  const std::vector<CameraPose> poses = smooth_poses(sample_uniform(job.trajectory, job.fps), job.smoothing_alpha);
  const double start = job.trajectory.start_time();
  const RenderConfig& cfg = job.render;

  auto sink_call = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      if (e.code() == ErrorCode::SinkFailure || e.code() == ErrorCode::SpawnFailure ||
          e.code() == ErrorCode::EncoderExitNonzero) {
        throw;
      }
      throw Error(ErrorCode::SinkFailure, e.what());
    } catch (const std::exception& e) {
      throw Error(ErrorCode::SinkFailure, e.what());
    }
  };

  sink_call([&] { job.sink->begin(cfg.width, cfg.height, job.fps); });

  std::optional<std::size_t> loaded_index;
  CloudPtr cloud;
  std::optional<Framebuffer> previous;
  std::optional<ImportanceMap> smoothed;

  for (std::size_t k = 0; k < poses.size(); ++k) {
    const double t = start + static_cast<double>(k) / job.fps;
    const std::size_t frame_index = frame_at(job.manifest, sequence_time_for(job.trajectory, job.manifest, t));
    if (!loaded_index || *loaded_index != frame_index) {
      cloud = job.load_frame(frame_index);
      if (!cloud) throw Error(ErrorCode::NotFound, "scene frame " + std::to_string(frame_index) + " could not be loaded");
      loaded_index = frame_index;
    }

    Framebuffer fb;
    if (job.foveation.enabled) {
      // The importance map for frame k is computed from frame k-1's output (or a full-precision
      // probe of frame 0 when a provider needs an image).
      const Framebuffer* probe = previous ? &*previous : nullptr;
      std::optional<Framebuffer> first_probe;
      std::vector<std::uint8_t> png;
      if (job.provider != nullptr) {
        if (probe == nullptr) {
          first_probe = render_tiled(*cloud, poses[k], cfg, job.pool);
          probe = &*first_probe;
        }
        png = encode_png(to_srgb8(*probe));
      }
      ImportanceResult importance =
          query_provider(png, job.prompt, job.provider, cfg.tiles_y(), cfg.tiles_x(), probe, job.on_diagnostic);
      smoothed = smoothed ? smooth_map(*smoothed, importance.map, job.foveation.temporal_beta) : std::move(importance.map);
      fb = render_foveated(*cloud, poses[k], *smoothed, cfg, job.foveation, job.pool);
    } else {
      fb = render_tiled(*cloud, poses[k], cfg, job.pool);
    }

    const Image8 image = to_srgb8(fb);
    sink_call([&] { job.sink->accept(k, image.width, image.height, image.rgb); });
    if (job.on_progress) job.on_progress(k + 1, poses.size());
    previous = std::move(fb);
  }

  ExportResult result;
  result.frame_count = poses.size();
  sink_call([&] { result.output = job.sink->finalize(); });
  return result;
}

// ---------------------------------------------------------------------------------------------
// Image sequence sink

std::string frame_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06zu.png", index);
  return buf;
}

namespace {

class ImageSequenceSink final : public EncoderSink {
 public:
  explicit ImageSequenceSink(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void begin(int, int, double fps) override {
    fps_ = fps;
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::SinkFailure, "cannot create " + dir_.string() + ": " + ec.message());
  }

  void accept(std::size_t index, int width, int height, std::span<const std::uint8_t> rgb8) override {
    if (index != frames_) throw Error(ErrorCode::SinkFailure, "frame " + std::to_string(index) + " arrived out of order");
    Image8 img{width, height, std::vector<std::uint8_t>(rgb8.begin(), rgb8.end())};
    const auto png = encode_png(img);
    const auto path = dir_ / frame_file_name(index);
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(png.data()), static_cast<std::streamsize>(png.size()));
    if (!out) throw Error(ErrorCode::SinkFailure, "failed writing " + path.string());
    ++frames_;
  }

  std::string finalize() override {
    nlohmann::json sidecar{{"fps", fps_}, {"frames", frames_}};
    std::ofstream out(dir_ / "sidecar.json");
    out << sidecar.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::SinkFailure, "failed writing sidecar.json");
    return dir_.string();
  }

 private:
  std::filesystem::path dir_;
  double fps_ = 0.0;
  std::size_t frames_ = 0;
};

}  // namespace

std::unique_ptr<EncoderSink> image_sequence_sink(std::filesystem::path directory) {
  return std::make_unique<ImageSequenceSink>(std::move(directory));
}

}  // namespace splat4d
