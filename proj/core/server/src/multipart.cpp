#include "splat4d/server/multipart.hpp"

#include <algorithm>
#include <cctype>

namespace splat4d::server {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Value of `key=` inside a header such as Content-Disposition; quotes are stripped.
std::optional<std::string> header_param(std::string_view header, std::string_view key) {
  std::size_t pos = 0;
  while (pos < header.size()) {
    std::size_t end = header.find(';', pos);
    if (end == std::string_view::npos) end = header.size();
    std::string_view item = trim(header.substr(pos, end - pos));
    const std::size_t eq = item.find('=');
    if (eq != std::string_view::npos && lower(trim(item.substr(0, eq))) == key) {
      std::string_view value = trim(item.substr(eq + 1));
      if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
      return std::string(value);
    }
    pos = end + 1;
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> multipart_boundary(std::string_view content_type) {
  const std::string type = lower(trim(content_type.substr(0, content_type.find(';'))));
  if (type != "multipart/form-data") return std::nullopt;
  auto b = header_param(content_type, "boundary");
  if (!b || b->empty()) return std::nullopt;
  return b;
}

std::vector<session::UploadFile> parse_multipart(std::string_view body, std::string_view boundary) {
  const std::string delim = "--" + std::string(boundary);
  std::vector<session::UploadFile> parts;

  std::size_t pos = body.find(delim);
  if (pos == std::string_view::npos) throw Error(ErrorCode::ParseError, "multipart boundary not found", 0);
  pos += delim.size();
  while (true) {
    if (body.substr(pos, 2) == "--") return parts;
    if (body.substr(pos, 2) != "\r\n") throw Error(ErrorCode::ParseError, "malformed multipart delimiter", pos);
    pos += 2;
    const std::size_t header_end = body.find("\r\n\r\n", pos);
    if (header_end == std::string_view::npos) throw Error(ErrorCode::ParseError, "unterminated part headers", pos);

    std::optional<std::string> name;
    std::optional<std::string> filename;
    std::string_view headers = body.substr(pos, header_end - pos);
    std::size_t line_start = 0;
    while (line_start <= headers.size()) {
      std::size_t line_end = headers.find("\r\n", line_start);
      if (line_end == std::string_view::npos) line_end = headers.size();
      std::string_view line = headers.substr(line_start, line_end - line_start);
      const std::size_t colon = line.find(':');
      if (colon != std::string_view::npos && lower(trim(line.substr(0, colon))) == "content-disposition") {
        const std::string_view value = line.substr(colon + 1);
        name = header_param(value, "name");
        filename = header_param(value, "filename");
      }
      line_start = line_end + 2;
    }

    const std::size_t data_start = header_end + 4;
    const std::size_t next = body.find("\r\n" + delim, data_start);
    if (next == std::string_view::npos) throw Error(ErrorCode::ParseError, "unterminated multipart part", data_start);
    if (!filename && !name) throw Error(ErrorCode::ParseError, "part without a name", pos);
    const std::string_view data = body.substr(data_start, next - data_start);
    parts.push_back({filename ? *filename : *name, std::vector<std::uint8_t>(data.begin(), data.end())});
    pos = next + 2 + delim.size();
  }
}

std::string build_multipart(const std::vector<session::UploadFile>& files, std::string_view boundary) {
  std::string body;
  for (const auto& f : files) {
    body += "--";
    body += boundary;
    body += "\r\nContent-Disposition: form-data; name=\"files\"; filename=\"" + f.name +
            "\"\r\nContent-Type: application/octet-stream\r\n\r\n";
    body.append(f.bytes.begin(), f.bytes.end());
    body += "\r\n";
  }
  body += "--";
  body += boundary;
  body += "--\r\n";
  return body;
}

}  // namespace splat4d::server
