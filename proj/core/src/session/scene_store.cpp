#include "splat4d/session/scene_store.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <openssl/evp.h>

#include "splat4d/ply.hpp"
#include "splat4d/sequence_io.hpp"

namespace splat4d::session {

namespace fs = std::filesystem;

namespace {

bool ends_with_json(const std::string& name) {
  return name.size() >= 5 && name.compare(name.size() - 5, 5, ".json") == 0;
}

// Only plain file names; anything that could escape the scene directory is refused.
std::string safe_name(const std::string& raw) {
  const std::string name = fs::path(raw).filename().string();
  if (name.empty() || name == "." || name == ".." || name != raw) {
    throw Error(ErrorCode::ValidationFailed, "invalid file name '" + raw + "'");
  }
  return name;
}

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
}

bool valid_id(const std::string& id) {
  return !id.empty() && id != "." && id != ".." && id.find('/') == std::string::npos &&
         id.find('\\') == std::string::npos;
}

}  // namespace

UploadError::UploadError(std::string file, const Error& cause)
    : Error(cause.code(), file + ": " + cause.what(), cause.offset(), cause.detail_code()), file_(std::move(file)) {}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::InvalidArgument, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

SceneStore::SceneStore(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

std::string SceneStore::upload(const std::vector<UploadFile>& files) {
  std::vector<const UploadFile*> plys;
  const UploadFile* manifest_part = nullptr;
  std::set<std::string> names;
  for (const auto& f : files) {
    const std::string name = safe_name(f.name);
    if (!names.insert(name).second) throw Error(ErrorCode::ValidationFailed, "duplicate file name '" + name + "'");
    if (ends_with_json(name)) {
      if (manifest_part != nullptr) throw Error(ErrorCode::ValidationFailed, "more than one manifest in upload");
      manifest_part = &f;
    } else {
      plys.push_back(&f);
    }
  }
  if (plys.empty()) throw Error(ErrorCode::ValidationFailed, "upload contains no PLY files");

  std::map<std::string, CloudPtr> parsed;
  for (const UploadFile* f : plys) {
    try {
      parsed.emplace(f->name, std::make_shared<const SplatCloud>(parse_ply(f->bytes)));
    } catch (const Error& e) {
      throw UploadError(f->name, e);
    }
  }

  SequenceManifest manifest;
  if (manifest_part != nullptr) {
    try {
      manifest = load_manifest(std::string_view(reinterpret_cast<const char*>(manifest_part->bytes.data()),
                                                manifest_part->bytes.size()));
    } catch (const Error& e) {
      throw UploadError(manifest_part->name, e);
    }
    for (const auto& frame : manifest.frames) {
      if (!parsed.contains(frame.file)) {
        throw Error(ErrorCode::ValidationFailed, "manifest references '" + frame.file + "' which was not uploaded");
      }
    }
  } else {
    std::vector<std::string> order;
    for (const UploadFile* f : plys) order.push_back(f->name);
    manifest = uniform_manifest(std::move(order));
  }

  // The id covers every PLY (in upload order) and the effective manifest.
  std::vector<std::uint8_t> material;
  for (const UploadFile* f : plys) {
    material.insert(material.end(), f->name.begin(), f->name.end());
    material.push_back(0);
    const std::uint64_t size = f->bytes.size();
    for (int i = 0; i < 8; ++i) material.push_back(static_cast<std::uint8_t>(size >> (8 * i)));
    material.insert(material.end(), f->bytes.begin(), f->bytes.end());
  }
  const std::string manifest_json = manifest_to_json(manifest);
  material.insert(material.end(), manifest_json.begin(), manifest_json.end());
  const std::string id = sha256_hex(material).substr(0, 32);

  auto scene = std::make_shared<SceneData>();
  scene->id = id;
  scene->manifest = manifest;
  for (const auto& frame : manifest.frames) scene->frames.push_back(parsed.at(frame.file));

  std::lock_guard lock(mutex_);
  if (cache_.contains(id)) return id;
  const fs::path dir = root_ / id;
  if (!fs::exists(dir / "manifest.json")) {
    const fs::path tmp = root_ / (id + ".partial");
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    for (const UploadFile* f : plys) write_file(tmp / f->name, f->bytes);
    write_file(tmp / "manifest.json",
               std::span(reinterpret_cast<const std::uint8_t*>(manifest_json.data()), manifest_json.size()));
    fs::remove_all(dir);
    fs::rename(tmp, dir);
  }
  cache_.emplace(id, std::move(scene));
  return id;
}

ScenePtr SceneStore::load_from_disk(const std::string& id) {
  const fs::path dir = root_ / id;
  if (!fs::is_directory(dir)) throw Error(ErrorCode::NotFound, "unknown scene '" + id + "'");
  LoadedSequence seq = load_sequence(dir);
  auto scene = std::make_shared<SceneData>();
  scene->id = id;
  scene->manifest = std::move(seq.manifest);
  scene->frames = std::move(seq.frames);
  return scene;
}

ScenePtr SceneStore::get(const std::string& id) {
  if (!valid_id(id)) throw Error(ErrorCode::NotFound, "unknown scene '" + id + "'");
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(id); it != cache_.end()) return it->second;
  }
  ScenePtr scene = load_from_disk(id);
  std::lock_guard lock(mutex_);
  return cache_.emplace(id, std::move(scene)).first->second;
}

bool SceneStore::contains(const std::string& id) {
  if (!valid_id(id)) return false;
  {
    std::lock_guard lock(mutex_);
    if (cache_.contains(id)) return true;
  }
  return fs::is_directory(root_ / id);
}

std::vector<std::string> SceneStore::list() const {
  std::set<std::string> ids;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [id, _] : cache_) ids.insert(id);
  }
  for (const auto& entry : fs::directory_iterator(root_)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_directory() && name.find(".partial") == std::string::npos) ids.insert(name);
  }
  return {ids.begin(), ids.end()};
}

}  // namespace splat4d::session
