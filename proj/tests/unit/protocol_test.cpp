#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "splat4d/error.hpp"
#include "splat4d/session/protocol.hpp"

using namespace splat4d;
using namespace splat4d::session;
using namespace splat4d::testing;

namespace {

ErrorCode decode_code(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_frame(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "decode_frame accepted the input";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(FrameHeader, GoldenBytes) {
  FrameHeader h;
  h.frame_seq = 0x01020304;
  h.width = 640;
  h.height = 360;
  h.format = FrameFormat::RawRgb8;
  h.flags = kFlagFoveated;
  h.sim_time_ms = 123456;
  const auto bytes = encode_frame_header(h);
  const std::array<std::uint8_t, 20> expected{'S', '4', 'D', 'F',        //
                                              0x04, 0x03, 0x02, 0x01,    // seq
                                              0x80, 0x02, 0x68, 0x01,    // 640, 360
                                              0x01, 0x01, 0x00, 0x00,    // format, flags, reserved
                                              0x40, 0xE2, 0x01, 0x00};   // 123456 ms
  EXPECT_EQ(bytes, expected);
}

TEST(FrameHeader, RoundTrip) {
  Rng rng(80);
  std::uniform_int_distribution<std::uint32_t> u32;
  std::uniform_int_distribution<int> dim(1, 64);
  for (int i = 0; i < 200; ++i) {
    FrameMessage m;
    m.header.frame_seq = u32(rng);
    m.header.width = static_cast<std::uint16_t>(dim(rng));
    m.header.height = static_cast<std::uint16_t>(dim(rng));
    m.header.format = i % 2 == 0 ? FrameFormat::Png : FrameFormat::RawRgb8;
    m.header.flags = static_cast<std::uint8_t>(i % 2);
    m.header.sim_time_ms = u32(rng);
    const std::size_t n = m.header.format == FrameFormat::RawRgb8
                              ? static_cast<std::size_t>(m.header.width) * m.header.height * 3
                              : static_cast<std::size_t>(i * 3);
    for (std::size_t k = 0; k < n; ++k) m.payload.push_back(static_cast<std::uint8_t>(u32(rng)));
    const auto wire = encode_frame(m);
    ASSERT_EQ(wire.size(), kFrameHeaderSize + n);
    const FrameMessage back = decode_frame(wire);
    ASSERT_EQ(back.header, m.header);
    ASSERT_EQ(back.payload, m.payload);
  }
}

TEST(FrameDecode, Errors) {
  FrameMessage m;
  m.header.width = 2;
  m.header.height = 2;
  m.header.format = FrameFormat::RawRgb8;
  m.payload.assign(12, 7);
  auto good = encode_frame(m);
  ASSERT_NO_THROW(decode_frame(good));

  EXPECT_EQ(decode_code(std::vector<std::uint8_t>(good.begin(), good.begin() + 19)), ErrorCode::ParseError);
  EXPECT_EQ(decode_code({}), ErrorCode::ParseError);

  auto bad_magic = good;
  bad_magic[3] = 'X';
  EXPECT_EQ(decode_code(bad_magic), ErrorCode::ParseError);

  auto bad_format = good;
  bad_format[12] = 2;
  EXPECT_EQ(decode_code(bad_format), ErrorCode::ParseError);

  auto short_payload = good;
  short_payload.pop_back();
  EXPECT_EQ(decode_code(short_payload), ErrorCode::ParseError);
}

TEST(Events, Shapes) {
  const auto a = events::ack(7);
  EXPECT_EQ(a.at("type"), "ack");
  EXPECT_EQ(a.at("seq"), 7);
  EXPECT_FALSE(a.contains("state"));
  EXPECT_EQ(events::ack(8, {{"time", 1.5}}).at("state").at("time"), 1.5);

  const auto e = events::error(std::nullopt, validation_failed("speed_must_be_positive"));
  EXPECT_EQ(e.at("type"), "error");
  EXPECT_TRUE(e.at("seq").is_null());
  EXPECT_EQ(e.at("error"), "validation_failed");
  EXPECT_EQ(e.at("code"), "speed_must_be_positive");
  EXPECT_FALSE(e.at("message").get<std::string>().empty());

  const auto ferr = from_error(Error(ErrorCode::ExportBusy, "busy"));
  EXPECT_EQ(ferr.kind, ferr.code);
  EXPECT_EQ(ferr.message, "busy");
  EXPECT_EQ(events::error(3, ferr).at("seq"), 3);

  const auto p = events::export_progress(1, 10, 31);
  EXPECT_EQ(p.at("type"), "export_progress");
  EXPECT_EQ(p.at("frames_done"), 10);
  EXPECT_EQ(p.at("frames_total"), 31);
  const auto d = events::export_done(1, "/tmp/out", 31);
  EXPECT_EQ(d.at("type"), "export_done");
  EXPECT_EQ(d.at("frames"), 31);
}

TEST(Commands, TagsAreUnique) {
  auto tags = command_tags();
  std::sort(tags.begin(), tags.end());
  EXPECT_EQ(std::adjacent_find(tags.begin(), tags.end()), tags.end());
  EXPECT_NE(std::find(tags.begin(), tags.end(), "Seek"), tags.end());
}
