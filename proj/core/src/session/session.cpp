#include "splat4d/session/session.hpp"

#include <cmath>
#include <numbers>

#include "splat4d/thread_pool.hpp"
#include "splat4d/trajectory.hpp"
#include "splat4d/video_export.hpp"

namespace splat4d::session {

using nlohmann::json;

namespace {

struct ExportCancelled {};

double require_number(const json& msg, const char* key, const std::string& code) {
  auto it = msg.find(key);
  if (it == msg.end() || !it->is_number()) throw validation_failed(code, std::string("expected numeric '") + key + "'");
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw validation_failed(code, std::string("'") + key + "' must be finite");
  return v;
}

template <int N>
Eigen::Matrix<double, N, 1> require_vec(const json& j, const char* key, const std::string& code) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_array() || it->size() != N) {
    throw validation_failed(code, std::string("expected '") + key + "' as an array of " + std::to_string(N));
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) {
    const json& e = (*it)[static_cast<std::size_t>(i)];
    if (!e.is_number() || !std::isfinite(e.get<double>())) throw validation_failed(code, std::string("non-numeric '") + key + "'");
    v[i] = e.get<double>();
  }
  return v;
}

std::vector<Vec2f> require_points(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_array()) throw validation_failed("invalid_shape", std::string("expected '") + key + "' points");
  std::vector<Vec2f> out;
  for (const auto& p : *it) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw validation_failed("invalid_shape", "points must be [x, y] pairs");
    }
    out.emplace_back(p[0].get<float>(), p[1].get<float>());
    if (!out.back().allFinite()) throw validation_failed("invalid_shape", "points must be finite");
  }
  return out;
}

CameraPose parse_pose(const json& msg) {
  if (msg.contains("eye")) {
    const Vec3d up = msg.contains("up") ? require_vec<3>(msg, "up", "invalid_pose") : Vec3d(0, 1, 0);
    CameraPose pose = look_at(require_vec<3>(msg, "eye", "invalid_pose"), require_vec<3>(msg, "target", "invalid_pose"), up);
    if (msg.contains("vfov_deg")) pose.vfov = require_number(msg, "vfov_deg", "invalid_pose") * std::numbers::pi / 180.0;
    return pose;
  }
  auto it = msg.find("pose");
  if (it == msg.end() || !it->is_object()) throw validation_failed("invalid_pose", "expected 'pose' or 'eye'/'target'");
  const json& p = *it;
  CameraPose pose;
  pose.position = require_vec<3>(p, "position", "invalid_pose");
  const Eigen::Vector4d q = require_vec<4>(p, "quaternion", "invalid_pose");
  if (q.norm() < 1e-12) throw validation_failed("invalid_pose", "zero quaternion");
  pose.orientation = Quatd(q[0], q[1], q[2], q[3]).normalized();
  if (p.contains("vfov_deg")) pose.vfov = require_number(p, "vfov_deg", "invalid_pose") * std::numbers::pi / 180.0;
  if (p.contains("near")) pose.near = require_number(p, "near", "invalid_pose");
  if (p.contains("far")) pose.far = require_number(p, "far", "invalid_pose");
  return pose;
}

SelectMode parse_mode(const json& msg) {
  const std::string mode = msg.value("mode", std::string("replace"));
  if (mode == "replace") return SelectMode::Replace;
  if (mode == "add") return SelectMode::Add;
  if (mode == "subtract") return SelectMode::Subtract;
  throw validation_failed("invalid_select_mode", "mode must be replace, add or subtract");
}

json pose_json(const CameraPose& pose) {
  return {{"position", {pose.position.x(), pose.position.y(), pose.position.z()}},
          {"quaternion", {pose.orientation.w(), pose.orientation.x(), pose.orientation.y(), pose.orientation.z()}},
          {"vfov_deg", pose.vfov * 180.0 / std::numbers::pi},
          {"near", pose.near},
          {"far", pose.far}};
}

}  // namespace

CameraPose default_camera(const SplatCloud& cloud) {
  if (cloud.empty()) return look_at(Vec3d(0, 0, 5), Vec3d::Zero(), Vec3d::UnitY());
  const Aabb box = cloud.bounds();
  const Vec3d center = ((box.min + box.max) * 0.5f).cast<double>();
  const Vec3d extent = (box.max - box.min).cast<double>();
  const double radius = std::max(0.5 * extent.norm(), 1e-3);
  // Distance at which the bounding sphere fits a 60 degree vertical field of view.
  const double distance = radius / std::sin(std::numbers::pi / 6.0);
  return look_at(center + Vec3d(0, 0, distance), center, Vec3d::UnitY());
}

Session::Session(std::string id, ScenePtr scene, SessionOptions options)
    : id_(std::move(id)), options_(std::move(options)), render_(options_.render), foveation_(options_.foveation) {
  validate(render_);
  if (!scene) throw Error(ErrorCode::NotFound, "session needs a scene");
  reset_scene_locked(std::move(scene));
}

Session::~Session() {
  closing_ = true;
  std::lock_guard lock(export_mutex_);
  if (export_thread_.joinable()) export_thread_.join();
}

void Session::reset_scene_locked(ScenePtr scene) {
  validate_manifest(scene->manifest);
  if (scene->frames.size() != scene->manifest.frames.size() || scene->frames.empty()) {
    throw Error(ErrorCode::InvalidArgument, "scene frames do not match its manifest");
  }
  scene_ = std::move(scene);
  frames_ = scene_->frames;
  histories_.clear();
  camera_ = default_camera(*frames_.front());
  playback_.time = 0.0;
  playback_.playing = false;
  selection_ = empty_mask(*frames_.front());
  selection_frame_ = 0;
  importance_.reset();
}

std::size_t Session::current_frame_locked() const { return frame_at(scene_->manifest, playback_.time); }

void Session::set_event_sink(EventSink sink) {
  std::lock_guard lock(sink_mutex_);
  sink_ = std::move(sink);
}

void Session::emit(const json& event) {
  std::lock_guard lock(sink_mutex_);
  if (sink_) sink_(event);
}

json Session::handle_text(std::string_view text) {
  json msg;
  try {
    msg = json::parse(text);
  } catch (const json::exception& e) {
    return events::error(std::nullopt, validation_failed("malformed_json", e.what()));
  }
  return handle(msg);
}

json Session::handle(const json& msg) {
  static const std::map<std::string, Handler> kHandlers{
      {"LoadScene", &Session::cmd_load_scene},   {"SetCamera", &Session::cmd_set_camera},
      {"Seek", &Session::cmd_seek},              {"Play", &Session::cmd_play},
      {"Pause", &Session::cmd_pause},            {"SetSpeed", &Session::cmd_set_speed},
      {"SetFps", &Session::cmd_set_fps},         {"SetLoop", &Session::cmd_set_loop},
      {"Select", &Session::cmd_select},          {"Edit", &Session::cmd_edit},
      {"Undo", &Session::cmd_undo},              {"SetFoveation", &Session::cmd_set_foveation},
      {"SetPrompt", &Session::cmd_set_prompt},   {"StartExport", &Session::cmd_start_export},
      {"Ping", &Session::cmd_ping},
  };

  std::optional<std::int64_t> seq;
  if (msg.is_object()) {
    if (auto it = msg.find("seq"); it != msg.end() && it->is_number_integer()) seq = it->get<std::int64_t>();
  }
  if (!msg.is_object() || !seq) return events::error(seq, validation_failed("missing_seq", "command needs an integer 'seq'"));

  auto type_it = msg.find("type");
  if (type_it == msg.end() || !type_it->is_string()) {
    return events::error(seq, validation_failed("missing_type", "command needs a string 'type'"));
  }
  const std::string type = type_it->get<std::string>();
  auto handler = kHandlers.find(type);
  if (handler == kHandlers.end()) {
    return events::error(seq, {"unknown_command", "unknown_command", "unknown command '" + type + "'"});
  }

  std::lock_guard lock(mutex_);
  json extra = json::object();
  try {
    (this->*handler->second)(msg, extra);
  } catch (const CommandError& e) {
    return events::error(seq, e);
  } catch (const Error& e) {
    return events::error(seq, from_error(e));
  } catch (const json::exception& e) {
    return events::error(seq, validation_failed("malformed_payload", e.what()));
  }
  if (type != "Ping") ++revision_;
  json ack = events::ack(*seq, state_summary_locked());
  for (auto& [k, v] : extra.items()) ack[k] = v;
  return ack;
}

void Session::cmd_load_scene(const json& msg, json&) {
  auto it = msg.find("scene");
  if (it == msg.end() || !it->is_string()) throw validation_failed("missing_scene", "expected 'scene' id");
  if (!options_.resolve_scene) throw Error(ErrorCode::NotFound, "no scene store attached");
  ScenePtr scene = options_.resolve_scene(it->get<std::string>());
  if (!scene) throw Error(ErrorCode::NotFound, "unknown scene");
  reset_scene_locked(std::move(scene));
}

void Session::cmd_set_camera(const json& msg, json&) {
  CameraPose pose = parse_pose(msg);
  if (!is_valid(pose)) throw validation_failed("invalid_pose", "pose fails camera invariants");
  camera_ = pose;
}

void Session::cmd_seek(const json& msg, json&) {
  const double t = require_number(msg, "t", "invalid_time");
  playback_ = seek(playback_, scene_->manifest, t);
}

void Session::cmd_play(const json&, json&) {
  if (!playback_.loop && playback_.time >= scene_->manifest.duration) playback_.time = 0.0;
  playback_.playing = true;
}

void Session::cmd_pause(const json&, json&) { playback_.playing = false; }

void Session::cmd_set_speed(const json& msg, json&) {
  auto it = msg.find("speed");
  if (it == msg.end() || !it->is_number() || !(it->get<double>() > 0.0) || !std::isfinite(it->get<double>())) {
    throw validation_failed("speed_must_be_positive");
  }
  playback_.speed = it->get<double>();
}

void Session::cmd_set_fps(const json& msg, json&) {
  auto it = msg.find("fps");
  if (it == msg.end() || !it->is_number() || !(it->get<double>() > 0.0) || !std::isfinite(it->get<double>())) {
    throw validation_failed("fps_must_be_positive");
  }
  playback_.target_fps = it->get<double>();
}

void Session::cmd_set_loop(const json& msg, json&) {
  auto it = msg.find("loop");
  if (it == msg.end() || !it->is_boolean()) throw validation_failed("invalid_loop", "expected boolean 'loop'");
  playback_.loop = it->get<bool>();
}

void Session::cmd_select(const json& msg, json& reply) {
  auto it = msg.find("shape");
  if (it == msg.end() || !it->is_object()) throw validation_failed("invalid_shape", "expected 'shape' object");
  const json& s = *it;
  const std::string kind = s.value("kind", std::string());
  const SelectMode mode = parse_mode(msg);
  const std::size_t frame = current_frame_locked();
  const SplatCloud& cloud = *frames_[frame];

  SelectionShape shape;
  if (kind == "rect") {
    const auto p0 = require_vec<2>(s, "p0", "invalid_shape");
    const auto p1 = require_vec<2>(s, "p1", "invalid_shape");
    shape = shape::Rect{p0.cast<float>(), p1.cast<float>()};
  } else if (kind == "polygon") {
    shape = shape::Polygon{require_points(s, "vertices")};
  } else if (kind == "lasso") {
    shape = shape::Lasso{require_points(s, "vertices")};
  } else if (kind == "brush") {
    shape = shape::Brush{require_points(s, "stroke"), static_cast<float>(require_number(s, "radius", "invalid_shape"))};
  } else if (kind == "sphere") {
    const float radius = static_cast<float>(require_number(s, "radius", "invalid_shape"));
    Vec3f center;
    if (s.contains("screen_point")) {
      const auto p = require_vec<2>(s, "screen_point", "invalid_shape");
      const auto hit = pick_splat(cloud, camera_, render_, p.cast<float>());
      if (!hit) throw validation_failed("no_splat_at_point", "no visible splat to center the sphere on");
      center = cloud[*hit].position;
      reply["sphere_center"] = {center.x(), center.y(), center.z()};
    } else {
      center = require_vec<3>(s, "center", "invalid_shape").cast<float>();
    }
    shape = shape::Sphere{center, radius};
  } else {
    throw validation_failed("invalid_shape", "unknown shape kind '" + kind + "'");
  }

  SelectionMask existing = selection_;
  if (selection_frame_ != frame) {
    if (mode != SelectMode::Replace) throw Error(ErrorCode::StaleMask, "selection belongs to another scene frame");
    existing = empty_mask(cloud);
  }
  selection_ = select(cloud, camera_, render_, shape, mode, existing);
  selection_frame_ = frame;
}

void Session::cmd_edit(const json& msg, json&) {
  const std::string op_name = msg.value("op", std::string());
  EditOp op;
  if (op_name == "delete") {
    op = edit::Delete{};
  } else if (op_name == "translate") {
    op = edit::Translate{require_vec<3>(msg, "delta", "invalid_delta").cast<float>()};
  } else {
    throw validation_failed("invalid_edit_op", "op must be delete or translate");
  }
  const std::size_t frame = current_frame_locked();
  if (selection_frame_ != frame) throw Error(ErrorCode::StaleMask, "selection belongs to another scene frame");
  EditResult result = apply_edit(*frames_[frame], selection_, op);

  histories_[frame].push(std::move(result.undo));
  frames_[frame] = result.cloud;
  if (std::holds_alternative<edit::Delete>(op)) {
    selection_ = empty_mask(*result.cloud);
  } else {
    selection_.cloud_version = result.cloud->version();
  }
}

void Session::cmd_undo(const json&, json&) {
  const std::size_t frame = current_frame_locked();
  auto it = histories_.find(frame);
  if (it == histories_.end()) throw Error(ErrorCode::EmptyHistory, "nothing to undo on this frame");
  CloudPtr restored = it->second.undo(*frames_[frame]);
  frames_[frame] = restored;
  if (it->second.empty()) histories_.erase(it);
  selection_ = empty_mask(*restored);
  selection_frame_ = frame;
}

void Session::cmd_set_foveation(const json& msg, json&) {
  FoveationConfig next = foveation_;
  if (msg.contains("threshold")) next.threshold = static_cast<float>(require_number(msg, "threshold", "invalid_foveation"));
  if (msg.contains("peripheral_downsample")) {
    next.peripheral_downsample = static_cast<int>(require_number(msg, "peripheral_downsample", "invalid_foveation"));
  }
  if (msg.contains("blur_radius")) next.blur_radius = static_cast<int>(require_number(msg, "blur_radius", "invalid_foveation"));
  if (msg.contains("temporal_beta")) next.temporal_beta = static_cast<float>(require_number(msg, "temporal_beta", "invalid_foveation"));
  if (msg.contains("enabled")) {
    if (!msg["enabled"].is_boolean()) throw validation_failed("invalid_foveation", "'enabled' must be boolean");
    next.enabled = msg["enabled"].get<bool>();
  }
  try {
    validate(next);
  } catch (const Error& e) {
    throw validation_failed("invalid_foveation", e.what());
  }
  if (render_.tile_size % next.peripheral_downsample != 0) {
    throw validation_failed("invalid_foveation", "tile size must be a multiple of the peripheral downsample");
  }
  foveation_ = next;
}

void Session::cmd_set_prompt(const json& msg, json&) {
  auto it = msg.find("prompt");
  if (it == msg.end() || !it->is_string()) throw validation_failed("invalid_prompt", "expected string 'prompt'");
  prompt_ = it->get<std::string>();
}

void Session::cmd_ping(const json&, json& reply) { reply["pong"] = true; }

void Session::cmd_start_export(const json& msg, json& reply) {
  if (export_running_) throw Error(ErrorCode::ExportBusy, "an export is already running for this session");

  auto traj_it = msg.find("trajectory");
  if (traj_it == msg.end() || !traj_it->is_object()) throw validation_failed("invalid_trajectory", "expected 'trajectory'");
  Trajectory trajectory;
  try {
    trajectory = load_trajectory(traj_it->dump());
    validate_trajectory(trajectory);
  } catch (const Error& e) {
    throw validation_failed("invalid_trajectory", e.what());
  }

  const double fps = msg.contains("fps") ? require_number(msg, "fps", "fps_must_be_positive") : 30.0;
  if (!(fps > 0.0)) throw validation_failed("fps_must_be_positive");
  RenderConfig render = render_;
  if (msg.contains("width")) render.width = static_cast<int>(require_number(msg, "width", "invalid_resolution"));
  if (msg.contains("height")) render.height = static_cast<int>(require_number(msg, "height", "invalid_resolution"));
  try {
    validate(render);
  } catch (const Error& e) {
    throw validation_failed("invalid_resolution", e.what());
  }
  const double alpha = msg.contains("smoothing_alpha") ? require_number(msg, "smoothing_alpha", "invalid_smoothing_alpha") : 0.8;
  if (!(alpha > 0.0 && alpha <= 1.0)) throw validation_failed("invalid_smoothing_alpha", "smoothing_alpha must be in (0, 1]");
  FoveationConfig fcfg = foveation_;
  if (msg.contains("foveated")) {
    if (!msg["foveated"].is_boolean()) throw validation_failed("invalid_foveated", "'foveated' must be boolean");
    fcfg.enabled = msg["foveated"].get<bool>();
  }
  std::string encoder;
  if (msg.contains("encoder")) {
    if (!msg["encoder"].is_string() || msg["encoder"].get<std::string>().empty()) {
      throw validation_failed("invalid_encoder", "'encoder' must be a command template");
    }
    encoder = msg["encoder"].get<std::string>();
  }
  std::string output_name = msg.value("output", std::string("video.mp4"));
  if (std::filesystem::path(output_name).filename().string() != output_name || output_name.empty() ||
      output_name == "..") {
    throw validation_failed("invalid_output", "output must be a plain file name");
  }

  const std::uint64_t job_id = next_job_++;
  const std::filesystem::path dir = options_.exports_dir / id_ / ("job_" + std::to_string(job_id));

  auto job = std::make_shared<ExportJob>();
  job->trajectory = std::move(trajectory);
  job->manifest = scene_->manifest;
  job->load_frame = [frames = frames_](std::size_t i) { return i < frames.size() ? frames[i] : CloudPtr{}; };
  job->render = render;
  job->fps = fps;
  job->foveation = fcfg;
  job->smoothing_alpha = static_cast<float>(alpha);
  job->prompt = prompt_;
  job->provider = options_.provider.get();
  const std::size_t every = std::max<std::size_t>(options_.export_progress_every, 1);
  job->on_progress = [this, job_id, every](std::size_t done, std::size_t total) {
    if (closing_) throw ExportCancelled{};
    if (done % every == 0) emit(events::export_progress(job_id, done, total));
  };
  job->on_diagnostic = [this](const std::string& m) { emit(events::diagnostic(m)); };

  std::lock_guard export_lock(export_mutex_);
  if (export_thread_.joinable()) export_thread_.join();
  export_running_ = true;
  export_thread_ = std::thread([this, job, job_id, dir, encoder, output_name, provider = options_.provider] {
    try {
      std::filesystem::create_directories(dir);
      std::unique_ptr<EncoderSink> sink =
          encoder.empty() ? image_sequence_sink(dir) : external_encoder_sink(encoder, dir / output_name);
      ThreadPool pool(1);
      job->sink = sink.get();
      job->pool = &pool;
      const ExportResult result = run_export(*job);
      emit(events::export_done(job_id, result.output, result.frame_count));
    } catch (const ExportCancelled&) {
    } catch (const Error& e) {
      json ev = events::error(std::nullopt, from_error(e));
      ev["job"] = job_id;
      emit(ev);
    } catch (const std::exception& e) {
      json ev = events::error(std::nullopt, {"sink_failure", "sink_failure", e.what()});
      ev["job"] = job_id;
      emit(ev);
    }
    export_running_ = false;
  });

  reply["job"] = job_id;
  reply["output_dir"] = dir.string();
  reply["frames_total"] = sample_count(job->trajectory.duration(), fps);
}

void Session::wait_for_export() {
  std::lock_guard lock(export_mutex_);
  if (export_thread_.joinable()) export_thread_.join();
}

SessionSnapshot Session::snapshot() const {
  std::lock_guard lock(mutex_);
  SessionSnapshot s;
  s.scene_id = scene_->id;
  s.camera = camera_;
  s.playback = playback_;
  s.frame_index = current_frame_locked();
  s.cloud = frames_[s.frame_index];
  s.render = render_;
  s.foveation = foveation_;
  s.prompt = prompt_;
  s.importance = importance_;
  s.selection_count = selection_.count();
  s.revision = revision_;
  return s;
}

void Session::advance_playback(double wall_dt) {
  std::lock_guard lock(mutex_);
  playback_ = advance(playback_, scene_->manifest, wall_dt);
}

void Session::set_resolution(int width, int height) {
  RenderConfig next = render_;
  next.width = width;
  next.height = height;
  validate(next);
  std::lock_guard lock(mutex_);
  render_ = next;
  importance_.reset();
  ++revision_;
}

void Session::update_importance(const ImportanceMap& map) {
  std::lock_guard lock(mutex_);
  if (map.rows() != render_.tiles_y() || map.cols() != render_.tiles_x()) return;
  if (importance_ && importance_->same_dims(map)) {
    importance_ = smooth_map(*importance_, map, foveation_.temporal_beta);
  } else {
    importance_ = map;
  }
}

json Session::state_summary() const {
  std::lock_guard lock(mutex_);
  return state_summary_locked();
}

json Session::state_summary_locked() const {
  const std::size_t frame = current_frame_locked();
  return {{"scene", scene_->id},
          {"time", playback_.time},
          {"playing", playback_.playing},
          {"speed", playback_.speed},
          {"loop", playback_.loop},
          {"target_fps", playback_.target_fps},
          {"frame", frame},
          {"frame_count", scene_->manifest.frame_count()},
          {"duration", scene_->manifest.duration},
          {"splats", frames_[frame]->size()},
          {"cloud_version", frames_[frame]->version()},
          {"selected", selection_.count()},
          {"camera", pose_json(camera_)},
          {"width", render_.width},
          {"height", render_.height},
          {"prompt", prompt_},
          {"foveation",
           {{"enabled", foveation_.enabled},
            {"threshold", foveation_.threshold},
            {"peripheral_downsample", foveation_.peripheral_downsample},
            {"blur_radius", foveation_.blur_radius},
            {"temporal_beta", foveation_.temporal_beta}}},
          {"export_running", export_running_.load()}};
}

}  // namespace splat4d::session
