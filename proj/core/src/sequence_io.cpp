#include "splat4d/sequence_io.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include "splat4d/error.hpp"
#include "splat4d/ply.hpp"

namespace splat4d {

namespace fs = std::filesystem;

std::vector<std::uint8_t> read_binary_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

namespace {

CloudPtr load_cloud(const fs::path& path) {
  try {
    return std::make_shared<const SplatCloud>(parse_ply(read_binary_file(path)));
  } catch (const Error& e) {
    throw Error(e.code(), path.filename().string() + ": " + e.what(), e.offset(), e.detail_code());
  }
}

LoadedSequence from_manifest(const fs::path& manifest_path) {
  const auto bytes = read_binary_file(manifest_path);
  LoadedSequence seq;
  seq.manifest = load_manifest(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  const fs::path base = manifest_path.parent_path();
  for (const auto& frame : seq.manifest.frames) seq.frames.push_back(load_cloud(base / frame.file));
  return seq;
}

}  // namespace

LoadedSequence load_sequence(const fs::path& path) {
  if (fs::is_directory(path)) {
    if (fs::exists(path / "manifest.json")) return from_manifest(path / "manifest.json");
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".ply") files.push_back(entry.path().filename().string());
    }
    if (files.empty()) throw Error(ErrorCode::EmptySequence, path.string() + " holds no .ply files");
    std::sort(files.begin(), files.end());
    LoadedSequence seq;
    for (const auto& f : files) seq.frames.push_back(load_cloud(path / f));
    seq.manifest = uniform_manifest(std::move(files));
    return seq;
  }
  if (path.extension() == ".json") return from_manifest(path);
  LoadedSequence seq;
  seq.frames.push_back(load_cloud(path));
  seq.manifest = uniform_manifest({path.filename().string()});
  return seq;
}

}  // namespace splat4d
