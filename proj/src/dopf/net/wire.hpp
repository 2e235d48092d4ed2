#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dopf::net {

inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::size_t kHeaderBytes = 20;
inline constexpr std::size_t kCrcBytes = 4;
inline constexpr std::size_t kMaxPayloadFloats = 8192;

enum class MsgKind : std::uint8_t {
  hello = 1,
  assign = 2,
  targets = 3,
  profile = 4,
  done = 5,
  error = 6,
};

const char* to_string(MsgKind k);

/// One datagram. Header layout (little-endian, see docs/wire.md):
///   [0]    u8  version
///   [1]    u8  kind
///   [2:10] u64 run_id
///   [10:12] u16 agent_id
///   [12:16] u32 k (iteration)
///   [16:20] u32 payload_count (number of f32 values)
/// followed by payload_count IEEE-754 binary32 values and a CRC-32 over
/// header + payload.
struct Message {
  std::uint8_t version = kWireVersion;
  MsgKind kind = MsgKind::hello;
  std::uint64_t run_id = 0;
  std::uint16_t agent_id = 0;
  std::uint32_t k = 0;
  std::vector<float> payload;

  bool operator==(const Message&) const = default;
};

/// CRC-32 (reflected polynomial 0xEDB88320, init and final xor 0xFFFFFFFF;
/// the zlib convention).
std::uint32_t crc32(const std::uint8_t* data, std::size_t len);

std::size_t frame_size(std::size_t payload_floats);

/// Throws std::invalid_argument on an oversize payload.
std::vector<std::uint8_t> encode(const Message& m);

/// Returns nullopt on any malformed frame: short/truncated buffer, bad
/// version, unknown kind, length mismatch, oversize payload, CRC mismatch.
/// `err`, when given, receives the reason.
std::optional<Message> decode(const std::uint8_t* data, std::size_t len,
                              std::string* err = nullptr);
std::optional<Message> decode(const std::vector<std::uint8_t>& frame, std::string* err = nullptr);

}  // namespace dopf::net
