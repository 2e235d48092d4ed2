#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dopf::net {

/// IPv4 UDP endpoint in host byte order.
struct Endpoint {
  std::uint32_t ip = 0;
  std::uint16_t port = 0;

  bool operator==(const Endpoint&) const = default;
  std::string to_string() const;
};

/// Parses "host:port", resolving names via the system resolver.
/// Throws std::runtime_error on failure.
Endpoint parse_endpoint(const std::string& s);

struct Datagram {
  Endpoint from;
  std::vector<std::uint8_t> bytes;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send_to(const Endpoint& to, const std::vector<std::uint8_t>& frame) = 0;
  /// Blocks up to timeout_ms; nullopt on timeout.
  virtual std::optional<Datagram> recv(int timeout_ms) = 0;
  virtual Endpoint local() const = 0;
};

/// Plain UDP socket. Binds to `bind` when given, otherwise the OS picks an
/// ephemeral port on first use.
std::unique_ptr<Transport> make_udp_transport(const Endpoint* bind = nullptr);

}  // namespace dopf::net
