// Acceptance checks. One PASS/FAIL line per criterion; exit status is nonzero when any gated
// criterion fails. The frame-rate gate is hardware dependent and only counts with --perf-gate.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>

#include "fixtures.hpp"
#include "ply_builder.hpp"
#include "splat4d/error.hpp"
#include "splat4d/metrics.hpp"
#include "splat4d/ply.hpp"
#include "splat4d/selection.hpp"
#include "splat4d/sequence_player.hpp"
#include "splat4d/session/frame_loop.hpp"
#include "splat4d/session/protocol.hpp"
#include "splat4d/session/session.hpp"
#include "splat4d/synthetic.hpp"
#include "splat4d/thread_pool.hpp"
#include "splat4d/trajectory.hpp"
#include "splat4d/video_export.hpp"

using namespace splat4d;
using namespace splat4d::testing;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  const char* name;
  bool advisory;
  std::function<Outcome()> run;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------------------------

struct Fixture {
  SplatCloud cloud;
  CameraPose pose;
};

std::vector<Fixture> fixture_scenes() {
  Rng rng(1001);
  std::vector<Fixture> out;
  for (std::size_t n : {10, 60, 250, 600, 1000}) {
    Fixture f{random_cloud(rng, n), random_pose(rng)};
    out.push_back(std::move(f));
  }
  return out;
}

RenderConfig fixture_config() {
  RenderConfig cfg;
  cfg.width = 192;
  cfg.height = 128;
  cfg.tile_size = 16;
  return cfg;
}

Outcome oracle_equivalence() {
  const auto start = std::chrono::steady_clock::now();
  const RenderConfig cfg = fixture_config();
  float worst = 0.0f;
  for (const auto& f : fixture_scenes()) {
    worst = std::max(worst, max_abs_diff(render_tiled(f.cloud, f.pose, cfg), render_reference(f.cloud, f.pose, cfg)));
  }
  const double secs = seconds_since(start);
  return {worst <= 1e-5f && secs < 60.0, fmt("5 scenes, max |diff| = %.3g, %.1f s", worst, secs)};
}

Outcome foveation_identity() {
  const RenderConfig cfg = fixture_config();
  FoveationConfig fcfg;
  fcfg.peripheral_downsample = 4;
  Rng rng(1002);
  std::uniform_real_distribution<float> below_one(0.0f, 0.99f);
  bool identical = true;
  bool one_foveal = true;
  bool degraded = true;
  const int tiles = cfg.tile_count();
  const std::uint64_t full_tile = static_cast<std::uint64_t>(cfg.tile_size) * cfg.tile_size;
  const std::uint64_t sub = full_tile / static_cast<std::uint64_t>(fcfg.peripheral_downsample * fcfg.peripheral_downsample);
  for (const auto& f : fixture_scenes()) {
    ImportanceMap map(cfg.tiles_y(), cfg.tiles_x());
    for (float& v : map.values()) v = below_one(rng);

    fcfg.threshold = 0.0f;
    const Framebuffer full = render_tiled(f.cloud, f.pose, cfg);
    const Framebuffer fov0 = render_foveated(f.cloud, f.pose, map, cfg, fcfg);
    identical = identical && full.pixels().size() == fov0.pixels().size() &&
                std::memcmp(full.pixels().data(), fov0.pixels().data(), full.pixels().size_bytes()) == 0;

    fcfg.threshold = 1.0f;
    FoveatedStats stats;
    render_foveated(f.cloud, f.pose, map, cfg, fcfg, nullptr, &stats);
    const auto classes = classify_tiles(map, 1.0f);
    one_foveal = one_foveal && stats.foveal_tiles == 1 &&
                 std::count(classes.begin(), classes.end(), TileClass::Foveal) == 1;
    degraded = degraded && stats.composite_samples == full_tile + static_cast<std::uint64_t>(tiles - 1) * sub;
  }
  return {identical && one_foveal && degraded,
          fmt("tau=0 bit-identical: %s; tau=1 single foveal tile: %s; others subsampled 1/%d: %s", identical ? "yes" : "no",
              one_foveal ? "yes" : "no", fcfg.peripheral_downsample * fcfg.peripheral_downsample, degraded ? "yes" : "no")};
}

Outcome foveation_cost() {
  const SplatCloud scene = make_synthetic_scene(100000, 7);
  RenderConfig cfg;
  cfg.width = 1280;
  cfg.height = 720;
  const std::vector<float> taus{0.0f, 0.25f, 0.5f, 0.75f, 1.0f};
  BenchmarkOptions opts;
  opts.repetitions = 4;
  opts.warmup = 1;
  const auto rows = benchmark_foveation(scene, synthetic_camera(), cfg, FoveationConfig{}, taus, opts,
                                        &default_thread_pool());
  bool monotone = true;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].foveal_fraction >= rows[i - 1].foveal_fraction && rows[i].samples < rows[i - 1].samples) monotone = false;
  }
  const auto near_fifth = std::min_element(rows.begin(), rows.end(), [](const BenchmarkRow& a, const BenchmarkRow& b) {
    return std::abs(a.foveal_fraction - 0.2) < std::abs(b.foveal_fraction - 0.2);
  });
  const auto full = std::find_if(rows.begin(), rows.end(), [](const BenchmarkRow& r) { return r.foveal_fraction == 1.0; });
  const bool faster = full != rows.end() && near_fifth->ms_per_frame < full->ms_per_frame;
  std::ostringstream os;
  for (const auto& r : rows) os << fmt(" [tau %.2f f=%.3f %.1f ms]", r.threshold, r.foveal_fraction, r.ms_per_frame);
  return {monotone && faster, "samples monotone: " + std::string(monotone ? "yes" : "no") +
                                  fmt("; %.1f ms at f=%.2f vs %.1f ms at f=1", near_fifth->ms_per_frame,
                                      near_fifth->foveal_fraction, full == rows.end() ? 0.0 : full->ms_per_frame) +
                                  ";" + os.str()};
}

Outcome realtime_fps() {
  using namespace splat4d::session;
  TempDir exports;
  auto scene = std::make_shared<SceneData>();
  scene->id = "synthetic";
  scene->frames.push_back(std::make_shared<const SplatCloud>(make_synthetic_scene(10000, 11)));
  scene->manifest = manifest_with_times({0.0}, 10.0);
  SessionOptions so;
  so.render.width = 640;
  so.render.height = 360;
  so.exports_dir = exports.path();
  auto s = std::make_shared<Session>("perf", scene, so);
  s->handle({{"seq", 1}, {"type", "SetLoop"}, {"loop", true}});
  s->handle({{"seq", 2}, {"type", "SetFps"}, {"fps", 60}});
  s->handle({{"seq", 3}, {"type", "SetCamera"}, {"eye", {0, 0, 5}}, {"target", {0, 0, 0}}, {"vfov_deg", 60}});
  s->handle({{"seq", 4}, {"type", "Play"}});

  FrameLoopOptions lo;
  lo.pool = &default_thread_pool();
  lo.format = FrameFormat::RawRgb8;
  FrameLoop loop(s, lo);
  FrameChannel channel;
  std::atomic<bool> stop{false};
  std::thread consumer([&] {
    while (!stop) {
      if (channel.take(std::chrono::milliseconds(50))) channel.release();
    }
  });
  std::thread producer([&] { run_frame_loop(loop, channel, stop); });

  const double t0 = monotonic_seconds();
  std::vector<double> samples;
  for (int sec = 1; sec <= 10; ++sec) {
    std::this_thread::sleep_until(std::chrono::steady_clock::now() +
                                  std::chrono::duration<double>(t0 + sec - monotonic_seconds()));
    samples.push_back(loop.meter().fps(monotonic_seconds()));
  }
  stop = true;
  channel.close();
  producer.join();
  consumer.join();
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= static_cast<double>(samples.size());
  const double min = *std::min_element(samples.begin(), samples.end());
  return {mean >= 60.0 && min >= 45.0,
          fmt("10k splats 640x360 foveated, %zu threads: fps_mean %.1f, fps_min %.1f (need >= 60 / >= 45)",
              default_thread_pool().size(), mean, min)};
}

bool splat_close(const Splat& a, const Splat& b, float tol) {
  if ((a.position - b.position).cwiseAbs().maxCoeff() > tol) return false;
  if ((a.scale - b.scale).cwiseAbs().maxCoeff() > tol) return false;
  if ((a.rotation.coeffs() - b.rotation.coeffs()).cwiseAbs().maxCoeff() > tol) return false;
  if (std::abs(a.opacity - b.opacity) > tol) return false;
  if (std::abs(a.color.r - b.color.r) > tol || std::abs(a.color.g - b.color.g) > tol || std::abs(a.color.b - b.color.b) > tol)
    return false;
  if (a.sh_rest.size() != b.sh_rest.size()) return false;
  for (std::size_t i = 0; i < a.sh_rest.size(); ++i)
    if (std::abs(a.sh_rest[i] - b.sh_rest[i]) > tol) return false;
  return true;
}

Outcome ply_round_trip() {
  Rng rng(1003);
  std::uniform_int_distribution<std::size_t> count(1, 400);
  std::uniform_real_distribution<float> coef(-1.0f, 1.0f);
  int failures = 0;
  for (int i = 0; i < 100; ++i) {
    SplatCloud base = random_cloud(rng, count(rng));
    std::vector<Splat> splats(base.splats().begin(), base.splats().end());
    const std::size_t rest = i % 3 == 0 ? 45 : 0;
    for (auto& s : splats) {
      s.sh_rest.resize(rest);
      for (float& v : s.sh_rest) v = coef(rng);
    }
    const SplatCloud c(std::move(splats));
    const SplatCloud once = parse_ply(serialize_ply(c));
    const SplatCloud twice = parse_ply(serialize_ply(once));
    bool ok = once.size() == c.size() && twice.size() == c.size();
    for (std::size_t k = 0; ok && k < c.size(); ++k) ok = splat_close(c[k], once[k], 1e-5f) && splat_close(once[k], twice[k], 1e-5f);
    if (!ok) ++failures;
  }
  const SplatCloud golden = parse_ply(read_data_file("golden_3dgs.ply"));
  const bool golden_ok = golden.size() == 37 && golden[0].sh_rest.size() == 45;
  return {failures == 0 && golden_ok, fmt("100 random clouds, %d outside 1e-5; golden fixture %zu splats", failures, golden.size())};
}

Outcome trajectory_checks() {
  Rng rng(1004);
  std::uniform_real_distribution<double> gap(0.1, 2.0);
  std::uniform_real_distribution<double> coord(-5.0, 5.0);
  int knot_misses = 0;
  double worst_norm = 0.0;
  std::size_t samples = 0;
  while (samples < 10000) {
    Trajectory traj;
    traj.mode = samples % 2 == 0 ? InterpolationMode::CatmullRom : InterpolationMode::Linear;
    double t = gap(rng);
    for (int k = 0; k < 6; ++k, t += gap(rng)) {
      CameraPose p = random_pose(rng);
      p.position += Vec3d(coord(rng), coord(rng), coord(rng));
      traj.keyframes.push_back({p, t});
    }
    for (const auto& kf : traj.keyframes) {
      const CameraPose p = interpolate(traj, kf.time);
      if (p.position != kf.pose.position || p.orientation.coeffs() != kf.pose.orientation.coeffs()) ++knot_misses;
    }
    for (const auto& p : sample_uniform(traj, 240.0)) {
      worst_norm = std::max(worst_norm, std::abs(p.orientation.norm() - 1.0));
      ++samples;
    }
  }
  const Quatd half = slerp(Quatd::Identity(), Quatd(Eigen::AngleAxisd(std::numbers::pi / 2, Vec3d::UnitZ())), 0.5);
  const Eigen::Vector4d want(0.9238795, 0.0, 0.0, 0.3826834);
  const double slerp_err = (Eigen::Vector4d(half.w(), half.x(), half.y(), half.z()) - want).cwiseAbs().maxCoeff();
  return {knot_misses == 0 && slerp_err <= 1e-6 && worst_norm <= 1e-6,
          fmt("knot misses %d; slerp half-angle error %.2g; %zu samples, max |norm-1| %.2g", knot_misses, slerp_err, samples,
              worst_norm)};
}

Outcome selection_oracle() {
  Rng rng(1005);
  std::uniform_real_distribution<float> u(-10.0f, 210.0f);
  std::uniform_real_distribution<float> v(0.0f, 200.0f);
  std::uniform_int_distribution<int> nv(3, 16);
  int mismatches = 0;
  for (int i = 0; i < 10000; ++i) {
    std::vector<Vec2f> poly;
    const int n = nv(rng);
    for (int k = 0; k < n; ++k) poly.emplace_back(v(rng), v(rng));
    const Vec2f p(u(rng), u(rng));
    if (point_in_polygon(p, poly) != crossing_count_inside(p.x(), p.y(), poly)) ++mismatches;
  }

  // Random edit sequences, fully undone, must give back the original cloud bit for bit.
  int undo_failures = 0;
  std::uniform_real_distribution<float> delta(-1.0f, 1.0f);
  std::bernoulli_distribution coin(0.3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto original = std::make_shared<const SplatCloud>(random_cloud(rng, 200));
    CloudPtr current = original;
    EditHistory history;
    const int edits = 1 + trial % 10;
    for (int e = 0; e < edits; ++e) {
      SelectionMask mask = empty_mask(*current);
      for (std::size_t k = 0; k < mask.bits.size(); ++k) mask.bits[k] = coin(rng);
      if (mask.empty()) mask.bits[0] = true;
      const EditOp op = e % 3 == 2 ? EditOp{edit::Delete{}} : EditOp{edit::Translate{Vec3f(delta(rng), delta(rng), delta(rng))}};
      EditResult r = apply_edit(*current, mask, op);
      history.push(std::move(r.undo));
      current = r.cloud;
    }
    while (!history.empty()) current = history.undo(*current);
    if (!same_splats(*current, *original)) ++undo_failures;
  }
  return {mismatches == 0 && undo_failures == 0,
          fmt("10000 point/polygon pairs, %d mismatches; 50 edit/undo sequences, %d not restored", mismatches, undo_failures)};
}

Outcome playback_arithmetic() {
  Rng rng(1006);
  std::uniform_real_distribution<double> dur(0.05, 10.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> spd(0.1, 8.0);
  std::uniform_real_distribution<double> gap(1e-3, 0.5);
  int bad = 0;
  for (int i = 0; i < 5000; ++i) {
    const double d = dur(rng);
    const SequenceManifest m = manifest_with_times({0.0}, d);
    PlaybackState s;
    s.time = unit(rng) * d;
    s.speed = spd(rng);
    s.loop = i % 2 == 0;
    s.playing = true;
    const double dt = unit(rng) * 3.0 * d;
    const PlaybackState a = advance(s, m, dt);
    const double raw = s.time + dt * s.speed;
    const double want = s.loop ? (raw >= d ? std::fmod(raw, d) : raw) : std::min(raw, d);
    if (a.time != want || a.playing != (s.loop || raw < d)) ++bad;

    const double q = (unit(rng) - 0.3) * 6.0 * d;
    const double seek_want = s.loop && q > d ? std::fmod(q, d) : std::clamp(q, 0.0, d);
    if (seek(s, m, q).time != seek_want) ++bad;
  }
  std::vector<double> times{0.0};
  while (times.size() < 1000) times.push_back(times.back() + gap(rng));
  const SequenceManifest m = manifest_with_times(times, times.back() + 0.1);
  std::vector<double> queries;
  for (int i = 0; i < 2000; ++i) queries.push_back((unit(rng) * 1.2 - 0.1) * m.duration);
  for (double t : times) queries.push_back(t);
  std::sort(queries.begin(), queries.end());
  std::size_t prev = 0;
  for (double q : queries) {
    const std::size_t f = frame_at(m, q);
    if (f != linear_scan_frame(m, q) || f < prev) ++bad;
    prev = f;
  }
  return {bad == 0, fmt("10000 advance/seek cases and %zu frame lookups, %d mismatches", queries.size(), bad)};
}

class MemorySink : public EncoderSink {
 public:
  void begin(int, int, double) override {}
  void accept(std::size_t, int, int, std::span<const std::uint8_t> rgb8) override { frames.emplace_back(rgb8.begin(), rgb8.end()); }
  std::string finalize() override { return "memory"; }
  std::vector<std::vector<std::uint8_t>> frames;
};

Outcome export_checks() {
  Rng rng(1007);
  std::vector<CloudPtr> clouds;
  std::vector<std::string> names;
  for (int i = 0; i < 4; ++i) {
    clouds.push_back(std::make_shared<const SplatCloud>(random_cloud(rng, 150)));
    names.push_back("f" + std::to_string(i) + ".ply");
  }
  const SequenceManifest manifest = uniform_manifest(names, 10.0);
  auto job_for = [&](EncoderSink* sink, double duration, double fps, int w, int h) {
    ExportJob job;
    job.trajectory = orbit_trajectory(duration);
    job.manifest = manifest;
    job.load_frame = [&](std::size_t i) { return clouds.at(i); };
    job.render.width = w;
    job.render.height = h;
    job.fps = fps;
    job.sink = sink;
    return job;
  };
  MemorySink a, b;
  run_export(job_for(&a, 1.0, 30.0, 96, 64));
  run_export(job_for(&b, 1.0, 30.0, 96, 64));
  const bool deterministic = !a.frames.empty() && a.frames == b.frames;

  std::uniform_real_distribution<double> dur(0.0, 3.0);
  std::uniform_real_distribution<double> fps(1.0, 30.0);
  int law_misses = 0;
  for (int i = 0; i < 20; ++i) {
    const double d = dur(rng);
    const double f = fps(rng);
    MemorySink sink;
    const ExportResult r = run_export(job_for(&sink, d, f, 16, 16));
    const auto want = static_cast<std::size_t>(std::floor(static_cast<long double>(d) * f)) + 1;
    if (r.frame_count != want || sink.frames.size() != want) ++law_misses;
  }
  return {deterministic && law_misses == 0,
          fmt("two runs bit-identical: %s (%zu frames); frame-count law misses %d/20", deterministic ? "yes" : "no",
              a.frames.size(), law_misses)};
}

Outcome metrics_checks() {
  auto cos = [](std::vector<float> u, std::vector<float> v) { return cosine(u, v); };
  const double c1 = cos({1, 0}, {1, 0});
  const double c0 = cos({1, 0}, {0, 1});
  const double c45 = cos({1, 0}, {1, 1});
  const bool closed = std::abs(c1 - 1.0) <= 1e-8 && std::abs(c0) <= 1e-8 && std::abs(c45 - 0.70710678) <= 1e-8;

  ScriptedEmbedding emb;
  emb.images[0] = {1.0f, 0.0f};
  emb.images[1] = {0.8f, 0.6f};
  emb.images[2] = {0.6f, 0.8f};
  emb.texts["prompt"] = {0.6f, 0.8f};
  const std::vector<Image8> views{keyed_image(1), keyed_image(2)};
  const double cc = clip_consistency(views, keyed_image(0), emb);
  const double cs = clip_score("prompt", keyed_image(1), emb);
  // Hand arithmetic in float products, as the stub vectors are floats.
  const double want_cc = (static_cast<double>(0.8f) + static_cast<double>(0.6f)) / 2.0;
  const double want_cs = static_cast<double>(0.6f) * 0.8f + static_cast<double>(0.8f) * 0.6f;
  const bool stubs = std::abs(cc - want_cc) <= 1e-7 && std::abs(cs - want_cs) <= 1e-7;
  return {closed && stubs, fmt("cos = %.9f / %.9f / %.9f; CC %.9f (want %.9f); CS %.9f (want %.9f)", c1, c0, c45, cc, want_cc,
                               cs, want_cs)};
}

Outcome protocol_conformance() {
  using namespace splat4d::session;
  FrameHeader h;
  h.frame_seq = 0x01020304;
  h.width = 640;
  h.height = 360;
  h.format = FrameFormat::RawRgb8;
  h.flags = kFlagFoveated;
  h.sim_time_ms = 123456;
  const std::array<std::uint8_t, 20> golden{'S', '4', 'D', 'F', 0x04, 0x03, 0x02, 0x01, 0x80, 0x02,
                                            0x68, 0x01, 0x01, 0x01, 0x00, 0x00, 0x40, 0xE2, 0x01, 0x00};
  const bool header_ok = encode_frame_header(h) == golden;

  TempDir exports;
  Rng rng(1008);
  auto scene = std::make_shared<SceneData>();
  scene->id = "proto";
  for (int i = 0; i < 3; ++i) scene->frames.push_back(std::make_shared<const SplatCloud>(random_cloud(rng, 100)));
  scene->manifest = manifest_with_times({0.0, 0.5, 1.0}, 1.5);
  SessionOptions so;
  so.render.width = 64;
  so.render.height = 48;
  so.exports_dir = exports.path();
  auto s = std::make_shared<Session>("proto", scene, so);
  const std::vector<json> script_base{
      {{"type", "Seek"}, {"t", 0.7}},
      {{"type", "Play"}},
      {{"type", "Pause"}},
      {{"type", "SetSpeed"}, {"speed", 2.0}},
      {{"type", "SetSpeed"}, {"speed", 0}},
      {{"type", "SetLoop"}, {"loop", true}},
      {{"type", "SetFps"}, {"fps", 30}},
      {{"type", "Select"}, {"shape", {{"kind", "rect"}, {"p0", {0, 0}}, {"p1", {64, 48}}}}},
      {{"type", "Edit"}, {"op", "translate"}, {"delta", {0.1, 0, 0}}},
      {{"type", "Undo"}},
      {{"type", "Undo"}},
      {{"type", "SetFoveation"}, {"threshold", 0.4}},
      {{"type", "SetPrompt"}, {"prompt", "dancer"}},
      {{"type", "SetCamera"}, {"eye", {0, 0, 4}}, {"target", {0, 0, 0}}},
      {{"type", "Frobnicate"}},
      {{"type", "Ping"}},
      {{"type", "Seek"}, {"t", "soon"}},
  };
  int totality_bad = 0;
  for (int i = 0; i < 50; ++i) {
    json c = script_base[static_cast<std::size_t>(i) % script_base.size()];
    c["seq"] = i;
    const json r = s->handle(c);
    const bool one_reply = (r.at("type") == "ack" || r.at("type") == "error") && r.at("seq") == i;
    if (!one_reply) ++totality_bad;
  }

  // Back-pressure: 60 fps producer, client drains at 10 fps.
  s->handle({{"seq", 100}, {"type", "SetFps"}, {"fps", 60}});
  s->handle({{"seq", 101}, {"type", "Play"}});
  FrameLoop loop(s);
  FrameChannel channel;
  std::atomic<bool> stop{false};
  std::size_t max_seen = 0;
  std::thread producer([&] { run_frame_loop(loop, channel, stop); });
  std::vector<std::uint32_t> seqs;
  const auto end = std::chrono::steady_clock::now() + std::chrono::seconds(3);
  while (std::chrono::steady_clock::now() < end) {
    max_seen = std::max(max_seen, channel.in_flight());
    if (auto bytes = channel.take(std::chrono::milliseconds(200))) {
      seqs.push_back(decode_frame(*bytes).header.frame_seq);
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
      max_seen = std::max(max_seen, channel.in_flight());
      channel.release();
    }
  }
  stop = true;
  producer.join();
  bool increasing = true;
  for (std::size_t i = 1; i < seqs.size(); ++i) increasing = increasing && seqs[i] > seqs[i - 1];
  const std::size_t bound = std::max(max_seen, channel.max_in_flight());
  const bool backpressure = bound <= FrameChannel::kMaxInFlight && increasing && seqs.size() >= 20;
  return {header_ok && totality_bad == 0 && backpressure,
          fmt("golden header: %s; 50 commands, %d without exactly one reply; max in-flight %zu, %zu frames delivered in 3 s, "
              "%llu dropped",
              header_ok ? "ok" : "mismatch", totality_bad, bound, seqs.size(),
              static_cast<unsigned long long>(channel.dropped()))};
}

}  // namespace

int main(int argc, char** argv) {
  bool perf_gate = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--perf-gate") == 0) perf_gate = true;
  }

  const std::vector<Criterion> criteria{
      {"oracle_equivalence", false, oracle_equivalence},
      {"foveation_identity", false, foveation_identity},
      {"foveation_cost", false, foveation_cost},
      {"realtime_60fps", !perf_gate, realtime_fps},
      {"ply_round_trip", false, ply_round_trip},
      {"trajectory", false, trajectory_checks},
      {"selection_oracle", false, selection_oracle},
      {"playback_arithmetic", false, playback_arithmetic},
      {"export_determinism", false, export_checks},
      {"metrics", false, metrics_checks},
      {"protocol_conformance", false, protocol_conformance},
  };

  int gated_failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass && !c.advisory) ++gated_failures;
    std::printf("%s %s%s: %s\n", o.pass ? "PASS" : "FAIL", c.name, c.advisory ? " (advisory)" : "", o.detail.c_str());
    std::fflush(stdout);
  }
  return gated_failures == 0 ? 0 : 1;
}
