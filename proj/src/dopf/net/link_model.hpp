#pragma once

#include <atomic>
#include <cstdint>
#include <memory>

#include "dopf/net/transport.hpp"

namespace dopf::net {

/// Latency/loss shaping applied independently to each traversal direction.
/// latency_lo == latency_hi gives a fixed delay; otherwise delays are drawn
/// uniformly from [lo, hi]. loss is an iid drop probability and must be < 1.
struct LinkModel {
  double latency_lo_ms = 0.0;
  double latency_hi_ms = 0.0;
  double loss = 0.0;
  std::uint64_t seed = 0;

  static LinkModel fixed(double latency_ms, double loss = 0.0, std::uint64_t seed = 0) {
    return {latency_ms, latency_ms, loss, seed};
  }
  bool is_identity() const { return latency_hi_ms <= 0.0 && loss <= 0.0; }
};

/// sent counts frames offered on the TX side (including ones the model then
/// drops); dropped_tx is that discarded subset. recved counts frames handed
/// to the caller; dropped_rx arrivals discarded before delivery.
struct LinkCounters {
  std::uint64_t sent = 0, recved = 0;
  std::uint64_t dropped_tx = 0, dropped_rx = 0;
};

struct LinkStats {
  std::atomic<std::uint64_t> sent{0}, recved{0};
  std::atomic<std::uint64_t> dropped_tx{0}, dropped_rx{0};

  LinkCounters snapshot() const {
    return {sent.load(), recved.load(), dropped_tx.load(), dropped_rx.load()};
  }
};

/// Wraps a transport with the model: outgoing frames are dropped/delayed on
/// a sender thread, incoming frames are held until their injected arrival
/// time. Throws std::invalid_argument on loss >= 1 or negative latency.
/// The wrapper drains pending sends on destruction. recv must be driven
/// from a single thread.
std::unique_ptr<Transport> with_link_model(std::unique_ptr<Transport> inner,
                                           const LinkModel& model, LinkStats* stats = nullptr);

}  // namespace dopf::net
