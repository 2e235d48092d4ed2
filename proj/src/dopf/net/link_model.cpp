#include "dopf/net/link_model.hpp"

#include <chrono>
#include <condition_variable>
#include <mutex>
#include <queue>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

namespace dopf::net {

namespace {

using Clock = std::chrono::steady_clock;

Clock::duration millis(double ms) {
  return std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double, std::milli>(ms));
}

struct PendingSend {
  Clock::time_point due;
  std::uint64_t seq = 0;
  Endpoint to;
  std::vector<std::uint8_t> frame;
};

struct SendLater {
  bool operator()(const PendingSend& a, const PendingSend& b) const {
    return a.due != b.due ? a.due > b.due : a.seq > b.seq;
  }
};

struct PendingRecv {
  Clock::time_point due;
  std::uint64_t seq = 0;
  Datagram d;
};

struct RecvLater {
  bool operator()(const PendingRecv& a, const PendingRecv& b) const {
    return a.due != b.due ? a.due > b.due : a.seq > b.seq;
  }
};

class ShapedTransport final : public Transport {
 public:
  ShapedTransport(std::unique_ptr<Transport> inner, const LinkModel& m, LinkStats* stats)
      : inner_(std::move(inner)), m_(m), stats_(stats), rng_(m.seed) {
    sender_ = std::thread([this] { sender_loop(); });
  }

  ~ShapedTransport() override {
    {
      std::lock_guard<std::mutex> lk(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    sender_.join();
  }

  void send_to(const Endpoint& to, const std::vector<std::uint8_t>& frame) override {
    std::unique_lock<std::mutex> lk(mu_);
    if (stats_) ++stats_->sent;
    if (drop()) {
      if (stats_) ++stats_->dropped_tx;
      return;
    }
    const double lat = latency();
    if (lat <= 0.0) {
      lk.unlock();
      inner_->send_to(to, frame);
      return;
    }
    tx_.push({Clock::now() + millis(lat), seq_++, to, frame});
    cv_.notify_one();
  }

  // single-threaded by contract; hold_ is only touched here
  std::optional<Datagram> recv(int timeout_ms) override {
    const auto deadline = Clock::now() + (timeout_ms < 0
                                              ? Clock::duration(std::chrono::hours(1))
                                              : millis((double)timeout_ms));
    for (;;) {
      auto now = Clock::now();
      if (!hold_.empty() && hold_.top().due <= now) {
        Datagram d = hold_.top().d;
        hold_.pop();
        if (stats_) ++stats_->recved;
        return d;
      }
      auto until = deadline;
      if (!hold_.empty() && hold_.top().due < until) until = hold_.top().due;
      if (now >= until) {
        if (hold_.empty() || hold_.top().due > deadline) return std::nullopt;
        continue;
      }
      const auto wait =
          std::chrono::duration_cast<std::chrono::milliseconds>(until - now).count();
      auto got = inner_->recv((int)std::max<long long>(1, wait));
      if (got) {
        std::lock_guard<std::mutex> lk(mu_);
        if (drop()) {
          if (stats_) ++stats_->dropped_rx;
        } else {
          hold_.push({Clock::now() + millis(latency()), seq_++, std::move(*got)});
        }
      } else if (Clock::now() >= deadline &&
                 (hold_.empty() || hold_.top().due > deadline)) {
        return std::nullopt;
      }
    }
  }

  Endpoint local() const override { return inner_->local(); }

 private:
  // callers hold mu_
  bool drop() { return m_.loss > 0.0 && uni_(rng_) < m_.loss; }
  double latency() {
    if (m_.latency_hi_ms <= 0.0) return 0.0;
    if (m_.latency_hi_ms == m_.latency_lo_ms) return m_.latency_lo_ms;
    return m_.latency_lo_ms + uni_(rng_) * (m_.latency_hi_ms - m_.latency_lo_ms);
  }

  void sender_loop() {
    std::unique_lock<std::mutex> lk(mu_);
    for (;;) {
      if (tx_.empty()) {
        if (stop_) return;
        cv_.wait(lk, [&] { return stop_ || !tx_.empty(); });
        continue;
      }
      const auto due = tx_.top().due;
      if (Clock::now() < due) {
        cv_.wait_until(lk, due);
        continue;
      }
      PendingSend ps = tx_.top();
      tx_.pop();
      lk.unlock();
      inner_->send_to(ps.to, ps.frame);
      lk.lock();
    }
  }

  std::unique_ptr<Transport> inner_;
  LinkModel m_;
  LinkStats* stats_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> uni_{0.0, 1.0};
  std::uint64_t seq_ = 0;

  std::mutex mu_;
  std::condition_variable cv_;
  bool stop_ = false;
  std::priority_queue<PendingSend, std::vector<PendingSend>, SendLater> tx_;
  std::priority_queue<PendingRecv, std::vector<PendingRecv>, RecvLater> hold_;
  std::thread sender_;
};

}  // namespace

std::unique_ptr<Transport> with_link_model(std::unique_ptr<Transport> inner,
                                           const LinkModel& model, LinkStats* stats) {
  // Validate before the identity shortcut so a nonsense model is rejected even
  // when it would wrap nothing.
  if (model.loss < 0.0 || model.loss >= 1.0)
    throw std::invalid_argument("link model: loss must be in [0, 1)");
  if (model.latency_lo_ms < 0.0 || model.latency_hi_ms < model.latency_lo_ms)
    throw std::invalid_argument("link model: need 0 <= latency_lo <= latency_hi");
  if (model.is_identity() && !stats) return inner;
  return std::make_unique<ShapedTransport>(std::move(inner), model, stats);
}

}  // namespace dopf::net
