#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "splat4d/splat.hpp"

namespace splat4d {

/// Parses an ascii or binary_little_endian Gaussian-splat PLY.
///
/// Required vertex properties: x y z f_dc_0..2 opacity scale_0..2 rot_0..3 (any order, float or
/// double). Stored values are activated: sigmoid opacity, exp scale, normalized quaternion and
/// color = kShC0 * f_dc + 0.5 clamped to [0,1]. f_rest_* values are kept in Splat::sh_rest; other
/// extra properties are skipped.
///
/// Throws Error with MissingProperty, Truncated, NonFinite, UnsupportedFormat or ParseError. The
/// error offset is the byte position in the input where the problem was detected.
SplatCloud parse_ply(std::span<const std::uint8_t> bytes);

/// Writes binary_little_endian PLY with properties x,y,z, f_dc_0..2, opacity, scale_0..2,
/// rot_0..3 followed by any f_rest_* coefficients. Opacity logits are clamped to +-16.
std::vector<std::uint8_t> serialize_ply(const SplatCloud& cloud);

}  // namespace splat4d
