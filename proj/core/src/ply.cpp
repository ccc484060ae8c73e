#include "splat4d/ply.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cctype>
#include <cstring>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "splat4d/error.hpp"

namespace splat4d {

namespace {

static_assert(std::endian::native == std::endian::little, "binary PLY I/O assumes a little-endian host");

enum class Format { Ascii, BinaryLittleEndian };

enum class ScalarType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::optional<ScalarType> scalar_type(std::string_view name) {
  if (name == "char" || name == "int8") return ScalarType::Int8;
  if (name == "uchar" || name == "uint8") return ScalarType::UInt8;
  if (name == "short" || name == "int16") return ScalarType::Int16;
  if (name == "ushort" || name == "uint16") return ScalarType::UInt16;
  if (name == "int" || name == "int32") return ScalarType::Int32;
  if (name == "uint" || name == "uint32") return ScalarType::UInt32;
  if (name == "float" || name == "float32") return ScalarType::Float32;
  if (name == "double" || name == "float64") return ScalarType::Float64;
  return std::nullopt;
}

std::size_t type_size(ScalarType t) {
  switch (t) {
    case ScalarType::Int8:
    case ScalarType::UInt8: return 1;
    case ScalarType::Int16:
    case ScalarType::UInt16: return 2;
    case ScalarType::Int32:
    case ScalarType::UInt32:
    case ScalarType::Float32: return 4;
    case ScalarType::Float64: return 8;
  }
  return 0;
}

template <typename T>
T load(const std::uint8_t* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

double read_binary(ScalarType t, const std::uint8_t* p) {
  switch (t) {
    case ScalarType::Int8: return load<std::int8_t>(p);
    case ScalarType::UInt8: return load<std::uint8_t>(p);
    case ScalarType::Int16: return load<std::int16_t>(p);
    case ScalarType::UInt16: return load<std::uint16_t>(p);
    case ScalarType::Int32: return load<std::int32_t>(p);
    case ScalarType::UInt32: return load<std::uint32_t>(p);
    case ScalarType::Float32: return load<float>(p);
    case ScalarType::Float64: return load<double>(p);
  }
  return 0.0;
}

struct Property {
  std::string name;
  ScalarType type;
};

struct Element {
  std::string name;
  std::uint64_t count = 0;
  std::vector<Property> properties;
  bool has_list = false;

  std::size_t stride() const {
    std::size_t s = 0;
    for (const auto& p : properties) s += type_size(p.type);
    return s;
  }
};

struct Header {
  Format format = Format::Ascii;
  std::vector<Element> elements;
  std::size_t data_offset = 0;
};

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

Header parse_header(std::string_view text) {
  Header header;
  std::size_t pos = 0;
  bool saw_format = false;
  bool first = true;
  if (!text.starts_with("ply\n") && !text.starts_with("ply\r\n"))
    throw Error(ErrorCode::ParseError, "missing 'ply' magic", 0);
  while (true) {
    const std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) throw Error(ErrorCode::Truncated, "PLY header is not terminated", pos);
    const std::string_view line = text.substr(pos, eol - pos);
    const auto tokens = split_ws(line);
    const std::size_t line_offset = pos;
    pos = eol + 1;
    if (first) {
      if (tokens.size() != 1 || tokens[0] != "ply") throw Error(ErrorCode::ParseError, "missing 'ply' magic", 0);
      first = false;
      continue;
    }
    if (tokens.empty()) continue;
    const std::string_view kw = tokens[0];
    if (kw == "end_header") break;
    if (kw == "comment" || kw == "obj_info") continue;
    if (kw == "format") {
      if (tokens.size() < 2) throw Error(ErrorCode::ParseError, "malformed format line", line_offset);
      if (tokens[1] == "ascii") {
        header.format = Format::Ascii;
      } else if (tokens[1] == "binary_little_endian") {
        header.format = Format::BinaryLittleEndian;
      } else if (tokens[1] == "binary_big_endian") {
        throw Error(ErrorCode::UnsupportedFormat, "binary_big_endian PLY is not supported", line_offset);
      } else {
        throw Error(ErrorCode::ParseError, "unknown PLY format '" + std::string(tokens[1]) + "'", line_offset);
      }
      saw_format = true;
    } else if (kw == "element") {
      if (tokens.size() != 3) throw Error(ErrorCode::ParseError, "malformed element line", line_offset);
      Element e;
      e.name = std::string(tokens[1]);
      const auto [ptr, ec] = std::from_chars(tokens[2].data(), tokens[2].data() + tokens[2].size(), e.count);
      if (ec != std::errc{} || ptr != tokens[2].data() + tokens[2].size()) {
        throw Error(ErrorCode::ParseError, "bad element count", line_offset);
      }
      header.elements.push_back(std::move(e));
    } else if (kw == "property") {
      if (header.elements.empty()) throw Error(ErrorCode::ParseError, "property before element", line_offset);
      Element& e = header.elements.back();
      if (tokens.size() >= 2 && tokens[1] == "list") {
        e.has_list = true;
        continue;
      }
      if (tokens.size() != 3) throw Error(ErrorCode::ParseError, "malformed property line", line_offset);
      const auto type = scalar_type(tokens[1]);
      if (!type) throw Error(ErrorCode::ParseError, "unknown property type '" + std::string(tokens[1]) + "'", line_offset);
      e.properties.push_back({std::string(tokens[2]), *type});
    } else {
      throw Error(ErrorCode::ParseError, "unexpected header keyword '" + std::string(kw) + "'", line_offset);
    }
  }
  if (!saw_format) throw Error(ErrorCode::ParseError, "PLY header has no format line", 0);
  header.data_offset = pos;
  return header;
}

// Column positions of the activated fields within a vertex row.
struct Columns {
  std::array<int, 3> pos{};
  std::array<int, 3> dc{};
  int opacity = -1;
  std::array<int, 3> scale{};
  std::array<int, 4> rot{};
  std::vector<int> rest;
};

Columns locate_columns(const Element& vertex, std::size_t header_offset) {
  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < vertex.properties.size(); ++i) index[vertex.properties[i].name] = static_cast<int>(i);
  auto need = [&](const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) throw Error(ErrorCode::MissingProperty, "vertex property '" + name + "' is missing", header_offset);
    return it->second;
  };
  Columns c;
  c.pos = {need("x"), need("y"), need("z")};
  c.dc = {need("f_dc_0"), need("f_dc_1"), need("f_dc_2")};
  c.opacity = need("opacity");
  c.scale = {need("scale_0"), need("scale_1"), need("scale_2")};
  c.rot = {need("rot_0"), need("rot_1"), need("rot_2"), need("rot_3")};
  for (int k = 0;; ++k) {
    auto it = index.find("f_rest_" + std::to_string(k));
    if (it == index.end()) break;
    c.rest.push_back(it->second);
  }
  return c;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Splat activate(const std::vector<double>& row, const Columns& c, std::uint64_t offset) {
  for (double v : row) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "non-finite vertex value", offset);
  }
  Splat s;
  s.position = Vec3f(static_cast<float>(row[c.pos[0]]), static_cast<float>(row[c.pos[1]]), static_cast<float>(row[c.pos[2]]));
  auto color = [&](int col) { return std::clamp(static_cast<float>(kShC0 * row[col] + 0.5), 0.0f, 1.0f); };
  s.color = {color(c.dc[0]), color(c.dc[1]), color(c.dc[2])};
  s.opacity = static_cast<float>(sigmoid(row[c.opacity]));
  for (int k = 0; k < 3; ++k) s.scale[k] = static_cast<float>(std::exp(row[c.scale[k]]));
  if (!s.scale.allFinite() || !(s.scale.array() > 0.0f).all()) {
    throw Error(ErrorCode::NonFinite, "activated scale is not a positive finite value", offset);
  }
  const double w = row[c.rot[0]], x = row[c.rot[1]], y = row[c.rot[2]], z = row[c.rot[3]];
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (!(n > 0.0) || !std::isfinite(n)) throw Error(ErrorCode::NonFinite, "rotation quaternion cannot be normalized", offset);
  s.rotation = Quatf(static_cast<float>(w / n), static_cast<float>(x / n), static_cast<float>(y / n), static_cast<float>(z / n));
  s.sh_rest.reserve(c.rest.size());
  for (int col : c.rest) s.sh_rest.push_back(static_cast<float>(row[col]));
  return s;
}

}  // namespace

SplatCloud parse_ply(std::span<const std::uint8_t> bytes) {
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  const Header header = parse_header(text);

  std::size_t offset = header.data_offset;
  const Element* vertex = nullptr;
  for (const Element& e : header.elements) {
    if (e.name == "vertex") {
      vertex = &e;
      break;
    }
    // Only fixed-size elements ahead of the vertices can be skipped.
    if (e.has_list) throw Error(ErrorCode::UnsupportedFormat, "list element before vertex data", offset);
    if (header.format == Format::BinaryLittleEndian) {
      offset += e.count * e.stride();
    } else {
      for (std::uint64_t i = 0; i < e.count; ++i) {
        const std::size_t eol = text.find('\n', offset);
        if (eol == std::string_view::npos) throw Error(ErrorCode::Truncated, "element data truncated", offset);
        offset = eol + 1;
      }
    }
  }
  if (vertex == nullptr) throw Error(ErrorCode::MissingProperty, "PLY has no vertex element", header.data_offset);
  if (vertex->has_list) throw Error(ErrorCode::UnsupportedFormat, "list property in vertex element", header.data_offset);

  const Columns columns = locate_columns(*vertex, header.data_offset);
  const std::size_t nprops = vertex->properties.size();
  std::vector<Splat> splats;
  splats.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(vertex->count, 1u << 24)));
  std::vector<double> row(nprops);

  if (header.format == Format::BinaryLittleEndian) {
    const std::size_t stride = vertex->stride();
    const std::uint64_t need = vertex->count * stride;
    if (offset > bytes.size() || bytes.size() - offset < need) {
      throw Error(ErrorCode::Truncated,
                  "vertex payload holds " + std::to_string(offset > bytes.size() ? 0 : (bytes.size() - offset) / stride) +
                      " of " + std::to_string(vertex->count) + " vertices",
                  bytes.size());
    }
    for (std::uint64_t i = 0; i < vertex->count; ++i) {
      const std::uint8_t* p = bytes.data() + offset;
      for (std::size_t k = 0; k < nprops; ++k) {
        row[k] = read_binary(vertex->properties[k].type, p);
        p += type_size(vertex->properties[k].type);
      }
      splats.push_back(activate(row, columns, offset));
      offset += stride;
    }
  } else {
    for (std::uint64_t i = 0; i < vertex->count; ++i) {
      const std::size_t line_start = offset;
      std::size_t k = 0;
      while (k < nprops) {
        while (offset < text.size() && std::isspace(static_cast<unsigned char>(text[offset]))) ++offset;
        if (offset >= text.size()) {
          throw Error(ErrorCode::Truncated,
                      "vertex data ends after " + std::to_string(i) + " of " + std::to_string(vertex->count) + " vertices",
                      offset);
        }
        std::size_t end = offset;
        while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
        const std::string_view tok = text.substr(offset, end - offset);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ptr != tok.data() + tok.size()) {
          // from_chars rejects "nan"/"inf" spellings on some inputs; treat those as non-finite.
          if (tok.find("nan") != std::string_view::npos || tok.find("inf") != std::string_view::npos) {
            v = std::numeric_limits<double>::quiet_NaN();
          } else {
            throw Error(ErrorCode::ParseError, "bad number '" + std::string(tok) + "'", offset);
          }
        } else if (ec == std::errc::result_out_of_range) {
          v = std::numeric_limits<double>::infinity();
        }
        row[k++] = v;
        offset = end;
      }
      splats.push_back(activate(row, columns, line_start));
    }
  }
  return SplatCloud(std::move(splats));
}

namespace {

void put_f32(std::vector<std::uint8_t>& out, float v) {
  std::uint8_t buf[4];
  std::memcpy(buf, &v, 4);
  out.insert(out.end(), buf, buf + 4);
}

float logit_clamped(float opacity) {
  constexpr double kClamp = 16.0;
  const double o = opacity;
  if (o <= 0.0) return static_cast<float>(-kClamp);
  if (o >= 1.0) return static_cast<float>(kClamp);
  return static_cast<float>(std::clamp(std::log(o / (1.0 - o)), -kClamp, kClamp));
}

}  // namespace

std::vector<std::uint8_t> serialize_ply(const SplatCloud& cloud) {
  const std::size_t rest = cloud.empty() ? 0 : cloud[0].sh_rest.size();
  for (const Splat& s : cloud.splats()) {
    if (s.sh_rest.size() != rest) {
      throw Error(ErrorCode::InvalidArgument, "splats carry differing numbers of SH coefficients");
    }
  }
  std::string header = "ply\nformat binary_little_endian 1.0\nelement vertex " + std::to_string(cloud.size()) + "\n";
  for (const char* name : {"x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity", "scale_0", "scale_1", "scale_2",
                           "rot_0", "rot_1", "rot_2", "rot_3"}) {
    header += "property float ";
    header += name;
    header += '\n';
  }
  for (std::size_t k = 0; k < rest; ++k) header += "property float f_rest_" + std::to_string(k) + "\n";
  header += "end_header\n";

  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + cloud.size() * (14 + rest) * 4);
  for (const Splat& s : cloud.splats()) {
    put_f32(out, s.position.x());
    put_f32(out, s.position.y());
    put_f32(out, s.position.z());
    put_f32(out, (s.color.r - 0.5f) / kShC0);
    put_f32(out, (s.color.g - 0.5f) / kShC0);
    put_f32(out, (s.color.b - 0.5f) / kShC0);
    put_f32(out, logit_clamped(s.opacity));
    for (int k = 0; k < 3; ++k) put_f32(out, std::log(s.scale[k]));
    put_f32(out, s.rotation.w());
    put_f32(out, s.rotation.x());
    put_f32(out, s.rotation.y());
    put_f32(out, s.rotation.z());
    for (float c : s.sh_rest) put_f32(out, c);
  }
  return out;
}

}  // namespace splat4d
