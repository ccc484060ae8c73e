#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "splat4d/error.hpp"

namespace splat4d::session {

enum class FrameFormat : std::uint8_t { Png = 0, RawRgb8 = 1 };

inline constexpr std::array<std::uint8_t, 4> kFrameMagic{'S', '4', 'D', 'F'};
inline constexpr std::size_t kFrameHeaderSize = 20;
inline constexpr std::uint8_t kFlagFoveated = 0x01;

/// Binary frame header, little-endian on the wire:
///   0  magic "S4DF"      4  frame_seq u32     8  width u16    10 height u16
///   12 format u8         13 flags u8          14 reserved u16 (zero)
///   16 sim_time_ms u32
struct FrameHeader {
  std::uint32_t frame_seq = 0;
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  FrameFormat format = FrameFormat::Png;
  std::uint8_t flags = 0;
  std::uint32_t sim_time_ms = 0;

  bool operator==(const FrameHeader&) const = default;
};

struct FrameMessage {
  FrameHeader header;
  std::vector<std::uint8_t> payload;
};

std::array<std::uint8_t, kFrameHeaderSize> encode_frame_header(const FrameHeader& header);
std::vector<std::uint8_t> encode_frame(const FrameMessage& frame);

/// Throws Error(ParseError) on bad magic, short input, unknown format, or (for raw frames) a
/// payload whose size disagrees with width * height * 3.
FrameMessage decode_frame(std::span<const std::uint8_t> bytes);

/// Error raised by command handling. `kind` is the error category, `code` the machine-readable
/// reason (equal to kind unless a validation rule supplies something more specific).
struct CommandError {
  std::string kind;
  std::string code;
  std::string message;
};

CommandError validation_failed(std::string code, std::string message = {});
CommandError from_error(const Error& e);

namespace events {
nlohmann::json ack(std::int64_t seq, nlohmann::json state = nullptr);
nlohmann::json error(std::optional<std::int64_t> seq, const CommandError& err);
nlohmann::json export_progress(std::uint64_t job, std::size_t frames_done, std::size_t frames_total);
nlohmann::json export_done(std::uint64_t job, const std::string& output, std::size_t frames);
nlohmann::json diagnostic(const std::string& message);
}  // namespace events

/// Every command tag the session understands.
const std::vector<std::string>& command_tags();

}  // namespace splat4d::session
