#include "splat4d/manifest.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "splat4d/error.hpp"

namespace splat4d {

void validate_manifest(const SequenceManifest& m) {
  if (m.frames.empty()) throw Error(ErrorCode::EmptySequence, "manifest has no frames");
  if (!(m.source_fps > 0.0) || !std::isfinite(m.source_fps)) throw Error(ErrorCode::ParseError, "source_fps must be positive");
  if (m.frames.front().t != 0.0) throw Error(ErrorCode::NonMonotoneTimestamps, "first timestamp must be 0");
  for (std::size_t i = 1; i < m.frames.size(); ++i) {
    if (!(m.frames[i].t > m.frames[i - 1].t) || !std::isfinite(m.frames[i].t)) {
      throw Error(ErrorCode::NonMonotoneTimestamps, "timestamp of frame " + std::to_string(i) + " does not increase");
    }
  }
  if (!(m.duration > 0.0) || !std::isfinite(m.duration) || m.duration < m.frames.back().t) {
    throw Error(ErrorCode::ParseError, "duration must be positive and cover the last timestamp");
  }
}

SequenceManifest load_manifest(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("manifest JSON: ") + e.what(), e.byte);
  }
  if (!doc.is_object()) throw Error(ErrorCode::ParseError, "manifest must be a JSON object");

  SequenceManifest m;
  try {
    if (doc.contains("source_fps")) m.source_fps = doc.at("source_fps").get<double>();
    if (!(m.source_fps > 0.0)) throw Error(ErrorCode::ParseError, "source_fps must be positive");
    if (!doc.contains("frames") || !doc.at("frames").is_array()) throw Error(ErrorCode::ParseError, "manifest needs a 'frames' array");
    const auto& frames = doc.at("frames");
    if (frames.empty()) throw Error(ErrorCode::EmptySequence, "manifest has no frames");
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const auto& f = frames[i];
      ManifestFrame frame;
      if (f.is_string()) {
        frame.file = f.get<std::string>();
        frame.t = static_cast<double>(i) / m.source_fps;
      } else {
        frame.file = f.at("file").get<std::string>();
        frame.t = f.contains("t") ? f.at("t").get<double>() : static_cast<double>(i) / m.source_fps;
      }
      m.frames.push_back(std::move(frame));
    }
    m.duration = doc.contains("duration") ? doc.at("duration").get<double>() : m.frames.back().t + 1.0 / m.source_fps;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("manifest field: ") + e.what());
  }
  validate_manifest(m);
  return m;
}

SequenceManifest uniform_manifest(std::vector<std::string> files, double source_fps) {
  SequenceManifest m;
  m.source_fps = source_fps;
  for (std::size_t i = 0; i < files.size(); ++i) m.frames.push_back({std::move(files[i]), static_cast<double>(i) / source_fps});
  m.duration = m.frames.empty() ? 0.0 : m.frames.back().t + 1.0 / source_fps;
  validate_manifest(m);
  return m;
}

std::string manifest_to_json(const SequenceManifest& m) {
  nlohmann::json doc;
  doc["source_fps"] = m.source_fps;
  doc["duration"] = m.duration;
  auto frames = nlohmann::json::array();
  for (const auto& f : m.frames) frames.push_back({{"file", f.file}, {"t", f.t}});
  doc["frames"] = std::move(frames);
  return doc.dump(2);
}

}  // namespace splat4d
