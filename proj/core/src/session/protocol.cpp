#include "splat4d/session/protocol.hpp"

#include <algorithm>
#include <cstring>

namespace splat4d::session {

namespace {

template <typename T>
void put_le(std::uint8_t* out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out[i] = static_cast<std::uint8_t>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF);
}

template <typename T>
T get_le(const std::uint8_t* in) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(in[i]) << (8 * i);
  return static_cast<T>(v);
}

}  // namespace

std::array<std::uint8_t, kFrameHeaderSize> encode_frame_header(const FrameHeader& h) {
  std::array<std::uint8_t, kFrameHeaderSize> out{};
  std::copy(kFrameMagic.begin(), kFrameMagic.end(), out.begin());
  put_le<std::uint32_t>(out.data() + 4, h.frame_seq);
  put_le<std::uint16_t>(out.data() + 8, h.width);
  put_le<std::uint16_t>(out.data() + 10, h.height);
  out[12] = static_cast<std::uint8_t>(h.format);
  out[13] = h.flags;
  put_le<std::uint16_t>(out.data() + 14, 0);
  put_le<std::uint32_t>(out.data() + 16, h.sim_time_ms);
  return out;
}

std::vector<std::uint8_t> encode_frame(const FrameMessage& frame) {
  const auto header = encode_frame_header(frame.header);
  std::vector<std::uint8_t> out;
  out.reserve(header.size() + frame.payload.size());
  out.insert(out.end(), header.begin(), header.end());
  out.insert(out.end(), frame.payload.begin(), frame.payload.end());
  return out;
}

FrameMessage decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFrameHeaderSize) throw Error(ErrorCode::ParseError, "frame shorter than its header", bytes.size());
  if (!std::equal(kFrameMagic.begin(), kFrameMagic.end(), bytes.begin())) throw Error(ErrorCode::ParseError, "bad frame magic", 0);
  FrameMessage frame;
  frame.header.frame_seq = get_le<std::uint32_t>(bytes.data() + 4);
  frame.header.width = get_le<std::uint16_t>(bytes.data() + 8);
  frame.header.height = get_le<std::uint16_t>(bytes.data() + 10);
  if (bytes[12] > 1) throw Error(ErrorCode::ParseError, "unknown frame format", 12);
  frame.header.format = static_cast<FrameFormat>(bytes[12]);
  frame.header.flags = bytes[13];
  frame.header.sim_time_ms = get_le<std::uint32_t>(bytes.data() + 16);
  frame.payload.assign(bytes.begin() + kFrameHeaderSize, bytes.end());
  if (frame.header.format == FrameFormat::RawRgb8 &&
      frame.payload.size() != static_cast<std::size_t>(frame.header.width) * frame.header.height * 3) {
    throw Error(ErrorCode::ParseError, "raw frame payload does not match width * height * 3", kFrameHeaderSize);
  }
  return frame;
}

CommandError validation_failed(std::string code, std::string message) {
  if (message.empty()) message = code;
  return {"validation_failed", std::move(code), std::move(message)};
}

CommandError from_error(const Error& e) {
  std::string kind(to_string(e.code()));
  return {kind, kind, e.what()};
}

namespace events {

nlohmann::json ack(std::int64_t seq, nlohmann::json state) {
  nlohmann::json ev{{"type", "ack"}, {"seq", seq}};
  if (!state.is_null()) ev["state"] = std::move(state);
  return ev;
}

nlohmann::json error(std::optional<std::int64_t> seq, const CommandError& err) {
  nlohmann::json ev{{"type", "error"}, {"error", err.kind}, {"code", err.code}, {"message", err.message}};
  ev["seq"] = seq ? nlohmann::json(*seq) : nlohmann::json(nullptr);
  return ev;
}

nlohmann::json export_progress(std::uint64_t job, std::size_t frames_done, std::size_t frames_total) {
  return {{"type", "export_progress"}, {"job", job}, {"frames_done", frames_done}, {"frames_total", frames_total}};
}

nlohmann::json export_done(std::uint64_t job, const std::string& output, std::size_t frames) {
  return {{"type", "export_done"}, {"job", job}, {"output", output}, {"frames", frames}};
}

nlohmann::json diagnostic(const std::string& message) { return {{"type", "diagnostic"}, {"message", message}}; }

}  // namespace events

const std::vector<std::string>& command_tags() {
  static const std::vector<std::string> tags{"LoadScene", "SetCamera", "Seek",      "Play",         "Pause",
                                             "SetSpeed",  "SetFps",    "SetLoop",   "Select",       "Edit",
                                             "Undo",      "SetFoveation", "SetPrompt", "StartExport", "Ping"};
  return tags;
}

}  // namespace splat4d::session
