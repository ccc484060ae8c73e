#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "splat4d/error.hpp"
#include "splat4d/manifest.hpp"
#include "splat4d/splat.hpp"

namespace splat4d::session {

/// Immutable loaded scene, shared by every session that views it.
struct SceneData {
  std::string id;
  SequenceManifest manifest;
  std::vector<CloudPtr> frames;
};

using ScenePtr = std::shared_ptr<const SceneData>;

struct UploadFile {
  std::string name;
  std::vector<std::uint8_t> bytes;
};

/// Upload rejected because one file failed to parse. what() names the file.
class UploadError : public Error {
 public:
  UploadError(std::string file, const Error& cause);
  const std::string& file() const { return file_; }

 private:
  std::string file_;
};

/// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(std::span<const std::uint8_t> bytes);

/// Directory-backed scene registry. Each scene lives in `<root>/<id>/` as its PLY files plus a
/// manifest.json. Scenes uploaded through this class get content-addressed ids; directories
/// placed under the root by hand are served under their directory name.
class SceneStore {
 public:
  explicit SceneStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  /// Parses every PLY, builds (or validates) the manifest and persists the scene. A part whose
  /// name ends in .json is taken as the manifest. Identical uploads return the same id.
  /// Throws UploadError for a bad PLY and Error(ValidationFailed) for an unusable upload.
  std::string upload(const std::vector<UploadFile>& files);

  /// Throws Error(NotFound).
  ScenePtr get(const std::string& id);
  bool contains(const std::string& id);
  std::vector<std::string> list() const;

 private:
  ScenePtr load_from_disk(const std::string& id);

  std::filesystem::path root_;
  mutable std::mutex mutex_;
  std::map<std::string, ScenePtr> cache_;
};

}  // namespace splat4d::session
