#include "dopf/net/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>

namespace dopf::net {

namespace {

[[noreturn]] void sys_fail(const std::string& what) {
  throw std::runtime_error(what + ": " + std::strerror(errno));
}

sockaddr_in to_sockaddr(const Endpoint& ep) {
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_addr.s_addr = htonl(ep.ip);
  sa.sin_port = htons(ep.port);
  return sa;
}

Endpoint from_sockaddr(const sockaddr_in& sa) {
  return {ntohl(sa.sin_addr.s_addr), ntohs(sa.sin_port)};
}

class UdpTransport final : public Transport {
 public:
  explicit UdpTransport(const Endpoint* bind_ep) {
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0) sys_fail("socket");
    Endpoint ep = bind_ep ? *bind_ep : Endpoint{INADDR_ANY, 0};
    sockaddr_in sa = to_sockaddr(ep);
    if (::bind(fd_, (sockaddr*)&sa, sizeof(sa)) != 0) {
      ::close(fd_);
      sys_fail("bind " + ep.to_string());
    }
  }

  ~UdpTransport() override {
    if (fd_ >= 0) ::close(fd_);
  }

  void send_to(const Endpoint& to, const std::vector<std::uint8_t>& frame) override {
    sockaddr_in sa = to_sockaddr(to);
    ssize_t n = ::sendto(fd_, frame.data(), frame.size(), 0, (sockaddr*)&sa, sizeof(sa));
    if (n < 0) sys_fail("sendto " + to.to_string());
  }

  std::optional<Datagram> recv(int timeout_ms) override {
    pollfd pfd{fd_, POLLIN, 0};
    int rc = ::poll(&pfd, 1, timeout_ms < 0 ? -1 : timeout_ms);
    if (rc < 0) {
      if (errno == EINTR) return std::nullopt;
      sys_fail("poll");
    }
    if (rc == 0) return std::nullopt;
    Datagram d;
    d.bytes.resize(65536);
    sockaddr_in sa{};
    socklen_t slen = sizeof(sa);
    ssize_t n = ::recvfrom(fd_, d.bytes.data(), d.bytes.size(), 0, (sockaddr*)&sa, &slen);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) return std::nullopt;
      sys_fail("recvfrom");
    }
    d.bytes.resize((std::size_t)n);
    d.from = from_sockaddr(sa);
    return d;
  }

  Endpoint local() const override {
    sockaddr_in sa{};
    socklen_t slen = sizeof(sa);
    if (::getsockname(fd_, (sockaddr*)&sa, &slen) != 0) sys_fail("getsockname");
    return from_sockaddr(sa);
  }

 private:
  int fd_ = -1;
};

}  // namespace

std::string Endpoint::to_string() const {
  in_addr a{};
  a.s_addr = htonl(ip);
  char buf[INET_ADDRSTRLEN] = {};
  inet_ntop(AF_INET, &a, buf, sizeof(buf));
  return std::string(buf) + ":" + std::to_string(port);
}

Endpoint parse_endpoint(const std::string& s) {
  const auto colon = s.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == s.size())
    throw std::runtime_error("endpoint must be host:port, got '" + s + "'");
  const std::string host = s.substr(0, colon);
  const std::string port = s.substr(colon + 1);

  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_DGRAM;
  addrinfo* res = nullptr;
  int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res);
  if (rc != 0) throw std::runtime_error("cannot resolve '" + s + "': " + gai_strerror(rc));
  Endpoint ep = from_sockaddr(*(sockaddr_in*)res->ai_addr);
  ::freeaddrinfo(res);
  return ep;
}

std::unique_ptr<Transport> make_udp_transport(const Endpoint* bind_ep) {
  return std::make_unique<UdpTransport>(bind_ep);
}

}  // namespace dopf::net
