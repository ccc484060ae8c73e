// splat4d command line: serve | render | bench | eval
#include <algorithm>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "splat4d/foveation.hpp"
#include "splat4d/image.hpp"
#include "splat4d/metrics.hpp"
#include "splat4d/sequence_io.hpp"
#include "splat4d/server/server.hpp"
#include "splat4d/session/session.hpp"
#include "splat4d/synthetic.hpp"
#include "splat4d/thread_pool.hpp"
#include "splat4d/trajectory.hpp"
#include "splat4d/video_export.hpp"

namespace {

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

std::vector<float> parse_taus(const std::string& text) {
  std::vector<float> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stof(item));
  }
  return out;
}

// "synthetic:N" builds the benchmark scene in memory; anything else is a path.
splat4d::LoadedSequence load_scene_arg(const std::string& arg) {
  constexpr std::string_view kSynthetic = "synthetic:";
  if (arg.rfind(kSynthetic, 0) == 0) {
    splat4d::LoadedSequence seq;
    const std::size_t count = std::stoul(arg.substr(kSynthetic.size()));
    seq.frames.push_back(std::make_shared<const splat4d::SplatCloud>(splat4d::make_synthetic_scene(count)));
    seq.manifest = splat4d::uniform_manifest({"synthetic.ply"});
    return seq;
  }
  return splat4d::load_sequence(arg);
}

int cmd_serve(int port, const std::string& scenes_dir, const std::string& exports_dir, const std::string& address,
              int width, int height, int io_threads) {
  splat4d::server::ServerOptions opts;
  opts.address = address;
  opts.port = static_cast<std::uint16_t>(port);
  opts.scenes_dir = scenes_dir;
  opts.io_threads = static_cast<std::size_t>(io_threads);
  opts.session.exports_dir = exports_dir;
  opts.session.render.width = width;
  opts.session.render.height = height;
  opts.session.provider = splat4d::importance_provider_from_env();
  if (opts.session.provider) spdlog::info("importance provider: {}", std::getenv("IMPORTANCE_PROVIDER_URL"));

  splat4d::server::Server server(opts);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.start();
  while (g_stop == 0) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  spdlog::info("shutting down");
  server.stop();
  return 0;
}

struct RenderArgs {
  std::string scene;
  std::string trajectory;
  double fps = 30.0;
  int width = 640;
  int height = 360;
  std::string out = "export";
  std::string encoder;
  std::string output = "video.mp4";
  float smoothing_alpha = 0.8f;
  bool no_foveation = false;
  float threshold = 0.5f;
  int downsample = 4;
  int blur_radius = 4;
  float beta = 0.7f;
  std::string prompt;
  int threads = 0;
};

int cmd_render(const RenderArgs& a) {
  const splat4d::LoadedSequence seq = load_scene_arg(a.scene);
  splat4d::Trajectory traj;
  if (a.trajectory.empty()) {
    // Without a path the camera holds still for the length of the sequence.
    splat4d::CameraPose pose = splat4d::session::default_camera(*seq.frames.front());
    traj.keyframes = {{pose, 0.0}, {pose, seq.manifest.duration}};
    traj.mode = splat4d::InterpolationMode::Linear;
  } else {
    const auto bytes = splat4d::read_binary_file(a.trajectory);
    traj = splat4d::load_trajectory(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  }

  splat4d::ExportJob job;
  job.trajectory = traj;
  job.manifest = seq.manifest;
  job.load_frame = [&seq](std::size_t i) { return seq.frames.at(i); };
  job.render.width = a.width;
  job.render.height = a.height;
  job.fps = a.fps;
  job.foveation.enabled = !a.no_foveation;
  job.foveation.threshold = a.threshold;
  job.foveation.peripheral_downsample = a.downsample;
  job.foveation.blur_radius = a.blur_radius;
  job.foveation.temporal_beta = a.beta;
  job.smoothing_alpha = a.smoothing_alpha;
  job.prompt = a.prompt;
  auto provider = splat4d::importance_provider_from_env();
  job.provider = provider.get();
  std::filesystem::create_directories(a.out);
  auto sink = a.encoder.empty() ? splat4d::image_sequence_sink(a.out)
                                : splat4d::external_encoder_sink(a.encoder, std::filesystem::path(a.out) / a.output);
  job.sink = sink.get();
  splat4d::ThreadPool pool(static_cast<std::size_t>(a.threads));
  job.pool = &pool;
  job.on_progress = [](std::size_t done, std::size_t total) {
    if (done % 10 == 0 || done == total) spdlog::info("rendered {}/{}", done, total);
  };
  job.on_diagnostic = [](const std::string& m) { spdlog::warn("{}", m); };

  const splat4d::ExportResult result = splat4d::run_export(job);
  std::cout << "{\"frames\": " << result.frame_count << ", \"output\": \"" << result.output << "\"}\n";
  return 0;
}

int cmd_bench(const std::string& scene, int width, int height, const std::string& taus, int reps, int warmup,
              const std::string& out, int threads) {
  const splat4d::LoadedSequence seq = load_scene_arg(scene);
  const splat4d::SplatCloud& cloud = *seq.frames.front();
  const splat4d::CameraPose pose =
      scene.rfind("synthetic:", 0) == 0 ? splat4d::synthetic_camera() : splat4d::session::default_camera(cloud);
  splat4d::RenderConfig cfg;
  cfg.width = width;
  cfg.height = height;
  splat4d::BenchmarkOptions opts;
  opts.repetitions = reps;
  opts.warmup = warmup;
  splat4d::ThreadPool pool(static_cast<std::size_t>(threads));
  const std::vector<float> thresholds = parse_taus(taus);
  const auto rows = splat4d::benchmark_foveation(cloud, pose, cfg, splat4d::FoveationConfig{}, thresholds, opts, &pool);
  const std::string report = splat4d::benchmark_to_json(rows, cfg, cloud.size());
  if (out.empty() || out == "-") {
    std::cout << report << "\n";
  } else {
    std::ofstream(out) << report << "\n";
    for (const auto& r : rows) {
      std::cout << "tau=" << r.threshold << " foveal_fraction=" << r.foveal_fraction << " ms/frame=" << r.ms_per_frame
                << " samples=" << r.samples << "\n";
    }
  }
  return 0;
}

// Views orbit the framing camera by +-yaw degrees; the center view is the framing camera itself.
int cmd_eval(const std::string& scene, const std::string& prompt, int width, int height, int views, double yaw_deg,
             int frames, int threads) {
  auto embedder = splat4d::embedding_provider_from_env();
  if (!embedder) throw splat4d::Error(splat4d::ErrorCode::InvalidArgument, "EMBEDDING_PROVIDER_URL is not set");
  const splat4d::LoadedSequence seq = load_scene_arg(scene);
  const splat4d::SplatCloud& cloud = *seq.frames.front();
  const splat4d::CameraPose center =
      scene.rfind("synthetic:", 0) == 0 ? splat4d::synthetic_camera() : splat4d::session::default_camera(cloud);
  splat4d::RenderConfig cfg;
  cfg.width = width;
  cfg.height = height;
  splat4d::ThreadPool pool(static_cast<std::size_t>(threads));

  // Orbit around the point the center camera looks at, at the same distance.
  const splat4d::Vec3d forward = center.orientation * splat4d::Vec3d(0, 0, -1);
  const splat4d::Vec3d target = center.position + forward * center.position.norm();
  std::vector<splat4d::Image8> images;
  for (int i = 0; i < views; ++i) {
    const double u = views == 1 ? 0.0 : -1.0 + 2.0 * i / (views - 1);
    const Eigen::AngleAxisd yaw(u * yaw_deg * std::numbers::pi / 180.0, splat4d::Vec3d::UnitY());
    splat4d::CameraPose pose = splat4d::look_at(target + yaw * (center.position - target), target, splat4d::Vec3d::UnitY());
    pose.vfov = center.vfov;
    images.push_back(splat4d::to_srgb8(splat4d::render_tiled(cloud, pose, cfg, &pool)));
  }
  const splat4d::Image8 center_image = splat4d::to_srgb8(splat4d::render_tiled(cloud, center, cfg, &pool));

  splat4d::EvalReport report;
  report.cc = splat4d::clip_consistency(images, center_image, *embedder);
  report.cs = splat4d::clip_score(prompt, center_image, *embedder);

  splat4d::FoveationConfig fcfg;
  const splat4d::ImportanceMap map = splat4d::heuristic_importance(nullptr, cfg.tiles_y(), cfg.tiles_x());
  std::vector<double> fov_ms, full_ms;
  splat4d::FoveatedStats stats;
  for (int i = 0; i < frames; ++i) {
    splat4d::render_foveated(cloud, center, map, cfg, fcfg, &pool, &stats);
    fov_ms.push_back(stats.elapsed_ms);
    const auto t0 = std::chrono::steady_clock::now();
    splat4d::render_tiled(cloud, center, cfg, &pool);
    full_ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  double sum = 0.0;
  report.fps_min = frames > 0 ? 1e300 : 0.0;
  for (double ms : fov_ms) {
    const double fps = 1000.0 / std::max(ms, 1e-6);
    sum += fps;
    report.fps_min = std::min(report.fps_min, fps);
  }
  report.fps_mean = frames > 0 ? sum / frames : 0.0;
  auto median = [](std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    return v.size() % 2 == 1 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
  };
  const double fov_median = median(fov_ms);
  report.foveated_speedup = fov_median > 0.0 ? median(full_ms) / fov_median : 0.0;
  std::cout << splat4d::eval_report_to_json(report) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  splat4d::server::init_logging_from_env();
  CLI::App app{"4D Gaussian-splat rendering engine"};
  app.require_subcommand(1);

  int port = 8080;
  std::string scenes_dir = "./scenes";
  std::string exports_dir = "./exports";
  std::string address = "0.0.0.0";
  int serve_width = 640;
  int serve_height = 360;
  int io_threads = 2;
  auto* serve = app.add_subcommand("serve", "Run the HTTP/WebSocket session server");
  serve->add_option("--port", port, "Listen port")->capture_default_str();
  serve->add_option("--scenes-dir", scenes_dir, "Scene storage directory")->capture_default_str();
  serve->add_option("--exports-dir", exports_dir, "Export output directory")->capture_default_str();
  serve->add_option("--address", address, "Bind address")->capture_default_str();
  serve->add_option("--width", serve_width, "Default stream width")->capture_default_str();
  serve->add_option("--height", serve_height, "Default stream height")->capture_default_str();
  serve->add_option("--io-threads", io_threads, "Network threads")->capture_default_str();

  RenderArgs r;
  auto* render = app.add_subcommand("render", "Headless video export");
  render->add_option("--scene", r.scene, "PLY file, manifest .json, scene directory or synthetic:N")->required();
  render->add_option("--trajectory", r.trajectory, "Camera trajectory JSON (default: static framing camera)");
  render->add_option("--fps", r.fps, "Output frames per second")->capture_default_str();
  render->add_option("--width", r.width)->capture_default_str();
  render->add_option("--height", r.height)->capture_default_str();
  render->add_option("--out", r.out, "Output directory")->capture_default_str();
  render->add_option("--encoder", r.encoder, "Encoder command template fed raw RGB24 on stdin, e.g. "
                                             "'ffmpeg -y -f rawvideo -pix_fmt rgb24 -s {width}x{height} -r {fps} -i - {output}'");
  render->add_option("--output", r.output, "Encoder output file name inside --out")->capture_default_str();
  render->add_option("--smoothing-alpha", r.smoothing_alpha, "Camera EMA weight of the newest pose")->capture_default_str();
  render->add_flag("--no-foveation", r.no_foveation, "Render every tile at full resolution");
  render->add_option("--threshold", r.threshold, "Foveal importance threshold")->capture_default_str();
  render->add_option("--downsample", r.downsample, "Peripheral downsample factor (2 or 4)")->capture_default_str();
  render->add_option("--blur-radius", r.blur_radius)->capture_default_str();
  render->add_option("--beta", r.beta, "Importance temporal smoothing")->capture_default_str();
  render->add_option("--prompt", r.prompt, "Prompt sent to the importance provider");
  render->add_option("--threads", r.threads, "Render threads (0 = all cores)")->capture_default_str();

  std::string bench_scene;
  int bench_width = 1280;
  int bench_height = 720;
  std::string taus = "0,0.25,0.5,0.75,1.0";
  int reps = 20;
  int warmup = 3;
  std::string bench_out = "report.json";
  int bench_threads = 0;
  auto* bench = app.add_subcommand("bench", "Foveation cost benchmark");
  bench->add_option("--scene", bench_scene, "PLY file, manifest, scene directory or synthetic:N")->required();
  bench->add_option("--width", bench_width)->capture_default_str();
  bench->add_option("--height", bench_height)->capture_default_str();
  bench->add_option("--taus", taus, "Comma-separated thresholds")->capture_default_str();
  bench->add_option("--reps", reps, "Timed repetitions per threshold")->capture_default_str();
  bench->add_option("--warmup", warmup, "Untimed repetitions per threshold")->capture_default_str();
  bench->add_option("--out", bench_out, "Report path ('-' for stdout)")->capture_default_str();
  bench->add_option("--threads", bench_threads, "Render threads (0 = all cores)")->capture_default_str();

  std::string eval_scene;
  std::string eval_prompt;
  int eval_width = 640;
  int eval_height = 360;
  int eval_views = 8;
  double eval_yaw = 30.0;
  int eval_frames = 30;
  int eval_threads = 0;
  auto* eval = app.add_subcommand("eval", "CLIP consistency / score and frame rate (needs EMBEDDING_PROVIDER_URL)");
  eval->add_option("--scene", eval_scene, "PLY file, manifest, scene directory or synthetic:N")->required();
  eval->add_option("--prompt", eval_prompt, "Scene prompt for the CLIP score")->required();
  eval->add_option("--width", eval_width)->capture_default_str();
  eval->add_option("--height", eval_height)->capture_default_str();
  eval->add_option("--views", eval_views, "Novel views for the consistency score")->capture_default_str();
  eval->add_option("--yaw", eval_yaw, "Largest view yaw offset in degrees")->capture_default_str();
  eval->add_option("--frames", eval_frames, "Timed frames")->capture_default_str();
  eval->add_option("--threads", eval_threads, "Render threads (0 = all cores)")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve) return cmd_serve(port, scenes_dir, exports_dir, address, serve_width, serve_height, io_threads);
    if (*render) return cmd_render(r);
    if (*eval) return cmd_eval(eval_scene, eval_prompt, eval_width, eval_height, eval_views, eval_yaw, eval_frames, eval_threads);
    if (*bench) return cmd_bench(bench_scene, bench_width, bench_height, taus, reps, warmup, bench_out, bench_threads);
  } catch (const splat4d::Error& e) {
    std::cerr << "error (" << splat4d::to_string(e.code()) << "): " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
