#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "splat4d/rasterizer.hpp"

namespace splat4d {

/// Interleaved 8-bit RGB image, row-major, top row first.
struct Image8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  bool operator==(const Image8&) const = default;
};

/// Standard sRGB transfer: 12.92c below 0.0031308, else 1.055 c^(1/2.4) - 0.055; input clamped.
float linear_to_srgb(float linear);
/// round(255 * linear_to_srgb(linear)), half away from zero.
std::uint8_t linear_to_srgb8(float linear);

Image8 to_srgb8(const Framebuffer& fb);

/// 8-bit RGB PNG. Throws Error(InvalidArgument) on encoder failure.
std::vector<std::uint8_t> encode_png(const Image8& image);
/// Decodes any PNG libpng understands into 8-bit RGB. Throws Error(ParseError).
Image8 decode_png(std::span<const std::uint8_t> bytes);

std::string base64_encode(std::span<const std::uint8_t> bytes);

}  // namespace splat4d
