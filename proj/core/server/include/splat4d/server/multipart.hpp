#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "splat4d/session/scene_store.hpp"

namespace splat4d::server {

/// Boundary parameter of a multipart/form-data Content-Type, if present.
std::optional<std::string> multipart_boundary(std::string_view content_type);

/// Splits a multipart/form-data body into parts named by their filename (falling back to the
/// form field name). Throws Error(ParseError) on a malformed body.
std::vector<session::UploadFile> parse_multipart(std::string_view body, std::string_view boundary);

/// Builds a multipart/form-data body; the inverse of parse_multipart, used by clients and tests.
std::string build_multipart(const std::vector<session::UploadFile>& files, std::string_view boundary);

}  // namespace splat4d::server
