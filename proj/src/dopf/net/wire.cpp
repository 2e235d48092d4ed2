#include "dopf/net/wire.hpp"

#include <array>
#include <cstring>
#include <stdexcept>

namespace dopf::net {

namespace {

std::array<std::uint32_t, 256> make_crc_table() {
  std::array<std::uint32_t, 256> t{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t c = i;
    for (int j = 0; j < 8; ++j) c = (c & 1u) ? (0xEDB88320u ^ (c >> 1)) : (c >> 1);
    t[i] = c;
  }
  return t;
}

void put_u16(std::vector<std::uint8_t>& b, std::size_t at, std::uint16_t v) {
  b[at] = (std::uint8_t)(v & 0xFF);
  b[at + 1] = (std::uint8_t)(v >> 8);
}

void put_u32(std::vector<std::uint8_t>& b, std::size_t at, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b[at + i] = (std::uint8_t)((v >> (8 * i)) & 0xFF);
}

void put_u64(std::vector<std::uint8_t>& b, std::size_t at, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b[at + i] = (std::uint8_t)((v >> (8 * i)) & 0xFF);
}

std::uint16_t get_u16(const std::uint8_t* p) {
  return (std::uint16_t)(p[0] | ((std::uint16_t)p[1] << 8));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

bool valid_kind(std::uint8_t k) {
  return k >= (std::uint8_t)MsgKind::hello && k <= (std::uint8_t)MsgKind::error;
}

bool fail(std::string* err, const char* why) {
  if (err) *err = why;
  return false;
}

}  // namespace

const char* to_string(MsgKind k) {
  switch (k) {
    case MsgKind::hello: return "HELLO";
    case MsgKind::assign: return "ASSIGN";
    case MsgKind::targets: return "TARGETS";
    case MsgKind::profile: return "PROFILE";
    case MsgKind::done: return "DONE";
    case MsgKind::error: return "ERROR";
  }
  return "?";
}

std::uint32_t crc32(const std::uint8_t* data, std::size_t len) {
  static const auto table = make_crc_table();
  std::uint32_t c = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < len; ++i) c = table[(c ^ data[i]) & 0xFFu] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

std::size_t frame_size(std::size_t payload_floats) {
  return kHeaderBytes + 4 * payload_floats + kCrcBytes;
}

std::vector<std::uint8_t> encode(const Message& m) {
  if (m.payload.size() > kMaxPayloadFloats)
    throw std::invalid_argument("wire: payload exceeds " + std::to_string(kMaxPayloadFloats) +
                                " floats");
  std::vector<std::uint8_t> b(frame_size(m.payload.size()));
  b[0] = m.version;
  b[1] = (std::uint8_t)m.kind;
  put_u64(b, 2, m.run_id);
  put_u16(b, 10, m.agent_id);
  put_u32(b, 12, m.k);
  put_u32(b, 16, (std::uint32_t)m.payload.size());
  for (std::size_t i = 0; i < m.payload.size(); ++i) {
    std::uint32_t bits;
    static_assert(sizeof(bits) == sizeof(float));
    std::memcpy(&bits, &m.payload[i], 4);
    put_u32(b, kHeaderBytes + 4 * i, bits);
  }
  const std::size_t body = b.size() - kCrcBytes;
  put_u32(b, body, crc32(b.data(), body));
  return b;
}

std::optional<Message> decode(const std::uint8_t* data, std::size_t len, std::string* err) {
  if (len < kHeaderBytes + kCrcBytes) {
    fail(err, "frame too short");
    return std::nullopt;
  }
  Message m;
  m.version = data[0];
  if (m.version != kWireVersion) {
    fail(err, "unsupported version");
    return std::nullopt;
  }
  if (!valid_kind(data[1])) {
    fail(err, "unknown kind");
    return std::nullopt;
  }
  m.kind = (MsgKind)data[1];
  m.run_id = get_u64(data + 2);
  m.agent_id = get_u16(data + 10);
  m.k = get_u32(data + 12);
  const std::uint32_t count = get_u32(data + 16);
  if (count > kMaxPayloadFloats) {
    fail(err, "oversize payload");
    return std::nullopt;
  }
  if (len != frame_size(count)) {
    fail(err, "length mismatch");
    return std::nullopt;
  }
  const std::size_t body = len - kCrcBytes;
  if (crc32(data, body) != get_u32(data + body)) {
    fail(err, "checksum mismatch");
    return std::nullopt;
  }
  m.payload.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t bits = get_u32(data + kHeaderBytes + 4 * i);
    std::memcpy(&m.payload[i], &bits, 4);
  }
  return m;
}

std::optional<Message> decode(const std::vector<std::uint8_t>& frame, std::string* err) {
  return decode(frame.data(), frame.size(), err);
}

}  // namespace dopf::net
