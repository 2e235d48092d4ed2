#include "dopf/net/aggregator.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "dopf/net/wire.hpp"

namespace dopf::net {

namespace {

using Clock = std::chrono::steady_clock;

int env_int(const char* name, int fallback) {
  const char* v = std::getenv(name);
  if (!v || !*v) return fallback;
  try {
    return std::stoi(v);
  } catch (...) {
    return fallback;
  }
}

std::uint64_t pick_run_id() {
  std::random_device rd;
  const auto t = (std::uint64_t)Clock::now().time_since_epoch().count();
  return (((std::uint64_t)rd() << 32) ^ (std::uint64_t)rd()) ^ (t * 0x9E3779B97F4A7C15ull);
}

}  // namespace

void apply_env_overrides(AggregatorConfig& cfg) {
  cfg.reg_timeout_ms = env_int("DOPF_REG_TIMEOUT_MS", cfg.reg_timeout_ms);
  cfg.initial_rto_ms = env_int("DOPF_RTO_MS", cfg.initial_rto_ms);
}

struct RemoteBackend::RxItem {
  Message msg;
  Endpoint from;
  Clock::time_point at;
  std::size_t bytes = 0;
};

struct RemoteBackend::Impl {
  const model::Case& c;
  AggregatorConfig cfg;
  std::unique_ptr<Transport> tr;
  std::uint64_t run_id = 0;

  struct AgentState {
    std::uint16_t id = 0;
    Endpoint ep;
    bool registered = false;
    double srtt_ms = 0.0;
  };
  std::vector<AgentState> agents;          // one per prosumer row
  std::map<std::uint16_t, int> id_to_row;  // prosumer id -> row
  std::uint32_t last_k = 0;

  std::mutex mu;
  std::condition_variable cv;
  std::deque<RxItem> q;
  std::atomic<bool> stop{false};
  std::thread rx;

  Impl(const model::Case& cc, const AggregatorConfig& cf, LinkStats* stats) : c(cc), cfg(cf) {
    auto udp = make_udp_transport(&cfg.bind);
    tr = with_link_model(std::move(udp), cfg.link, stats);
    run_id = cfg.run_id ? cfg.run_id : pick_run_id();
    const int nh = (int)c.prosumers.size();
    agents.resize(nh);
    for (int h = 0; h < nh; ++h) {
      agents[h].id = (std::uint16_t)c.prosumers[h].id;
      id_to_row[agents[h].id] = h;
    }
    rx = std::thread([this] { rx_loop(); });
  }

  ~Impl() {
    stop = true;
    if (rx.joinable()) rx.join();
  }

  void rx_loop() {
    while (!stop) {
      auto d = tr->recv(50);
      if (!d) continue;
      auto m = decode(d->bytes);
      if (!m) continue;  // malformed frames are dropped silently
      std::lock_guard<std::mutex> lk(mu);
      q.push_back({std::move(*m), d->from, Clock::now(), d->bytes.size()});
      cv.notify_one();
    }
  }

  std::optional<RxItem> pop_until(Clock::time_point deadline) {
    std::unique_lock<std::mutex> lk(mu);
    if (!cv.wait_until(lk, deadline, [&] { return !q.empty(); })) return std::nullopt;
    RxItem it = std::move(q.front());
    q.pop_front();
    return it;
  }

  void send_assign(const RxItem& hello) {
    Message m;
    m.kind = MsgKind::assign;
    m.run_id = run_id;
    m.agent_id = hello.msg.agent_id;
    m.k = 0;
    tr->send_to(hello.from, encode(m));
  }

  double rto_ms(const AgentState& a) const {
    const double base = a.srtt_ms > 0.0 ? 2.0 * a.srtt_ms : (double)cfg.initial_rto_ms;
    return std::max((double)cfg.min_rto_ms, base);
  }
};

RemoteBackend::RemoteBackend(const model::Case& c, const AggregatorConfig& cfg)
    : impl_(std::make_unique<Impl>(c, cfg, &link_stats_)) {
  run_id_ = impl_->run_id;
}

RemoteBackend::~RemoteBackend() = default;

Endpoint RemoteBackend::local() const { return impl_->tr->local(); }

void RemoteBackend::register_agents() {
  auto& im = *impl_;
  std::set<std::uint16_t> missing;
  for (auto& a : im.agents) missing.insert(a.id);
  const auto deadline = Clock::now() + std::chrono::milliseconds(im.cfg.reg_timeout_ms);
  while (!missing.empty()) {
    auto it = im.pop_until(deadline);
    if (!it) {
      std::ostringstream os;
      os << "registration window expired; missing agents:";
      for (auto id : missing) os << ' ' << id;
      throw std::runtime_error(os.str());
    }
    if (it->msg.kind != MsgKind::hello) continue;
    auto row = im.id_to_row.find(it->msg.agent_id);
    if (row == im.id_to_row.end()) continue;  // not one of ours
    auto& a = im.agents[row->second];
    a.ep = it->from;
    a.registered = true;
    missing.erase(a.id);
    im.send_assign(*it);
  }
}

RemoteBackend::RoundResult RemoteBackend::solve_round(int k, const Eigen::MatrixXd& p_hat,
                                                      const Eigen::MatrixXd& lambda,
                                                      double rho) {
  auto& im = *impl_;
  const int nh = (int)im.agents.size();
  const int nt = (int)p_hat.cols();
  im.last_k = (std::uint32_t)k;

  RoundResult out;
  out.p.resize(nh, nt);

  struct Pend {
    std::vector<std::uint8_t> frame;
    Clock::time_point sent_at;
    Clock::time_point deadline;
    int attempts = 0;
    bool done = false;
  };
  std::vector<Pend> pend(nh);

  for (int h = 0; h < nh; ++h) {
    if (!im.agents[h].registered) {
      out.ok = false;
      out.transport_fault = true;
      out.failed_agent = im.agents[h].id;
      out.error = "agent " + std::to_string(im.agents[h].id) + " never registered";
      return out;
    }
    Message m;
    m.kind = MsgKind::targets;
    m.run_id = im.run_id;
    m.agent_id = im.agents[h].id;
    m.k = (std::uint32_t)k;
    m.payload.resize(2 * nt + 1);
    for (int t = 0; t < nt; ++t) {
      m.payload[t] = (float)p_hat(h, t);
      m.payload[nt + t] = (float)lambda(h, t);
    }
    m.payload[2 * nt] = (float)rho;
    pend[h].frame = encode(m);
  }

  int outstanding = nh;
  for (int h = 0; h < nh; ++h) {
    auto& p = pend[h];
    p.sent_at = Clock::now();
    p.attempts = 1;
    p.deadline = p.sent_at + std::chrono::duration_cast<Clock::duration>(
                                 std::chrono::duration<double, std::milli>(
                                     im.rto_ms(im.agents[h])));
    im.tr->send_to(im.agents[h].ep, p.frame);
    out.bytes_down += p.frame.size();
  }

  while (outstanding > 0) {
    Clock::time_point next = Clock::time_point::max();
    for (auto& p : pend)
      if (!p.done && p.deadline < next) next = p.deadline;

    auto it = im.pop_until(next);
    if (it) {
      const auto& m = it->msg;
      if (m.kind == MsgKind::hello) {
        // late or restarted agent: refresh its endpoint and re-assign
        auto row = im.id_to_row.find(m.agent_id);
        if (row != im.id_to_row.end()) {
          im.agents[row->second].ep = it->from;
          im.send_assign(*it);
        }
        continue;
      }
      if (m.run_id != im.run_id) continue;
      if (m.kind == MsgKind::error) {
        out.ok = false;
        out.transport_fault = false;
        out.failed_agent = m.agent_id;
        out.error = "agent " + std::to_string(m.agent_id) + " reported solver failure at k=" +
                    std::to_string(m.k);
        return out;
      }
      if (m.kind != MsgKind::profile) continue;
      auto row = im.id_to_row.find(m.agent_id);
      if (row == im.id_to_row.end()) continue;
      out.bytes_up += it->bytes;
      if (m.k != (std::uint32_t)k) continue;  // stale round
      auto& p = pend[row->second];
      if (p.done) continue;  // duplicate
      if ((int)m.payload.size() != nt) continue;
      for (int t = 0; t < nt; ++t) out.p(row->second, t) = (double)m.payload[t];
      if (p.attempts == 1) {  // Karn: only clean samples feed SRTT
        const double sample =
            std::chrono::duration<double, std::milli>(it->at - p.sent_at).count();
        auto& a = im.agents[row->second];
        a.srtt_ms = a.srtt_ms > 0.0 ? 0.875 * a.srtt_ms + 0.125 * sample : sample;
      }
      p.done = true;
      --outstanding;
      continue;
    }

    const auto now = Clock::now();
    for (int h = 0; h < nh; ++h) {
      auto& p = pend[h];
      if (p.done || p.deadline > now) continue;
      if (p.attempts >= im.cfg.max_attempts) {
        out.ok = false;
        out.transport_fault = true;
        out.failed_agent = im.agents[h].id;
        out.error = "agent " + std::to_string(im.agents[h].id) + " unreachable at k=" +
                    std::to_string(k) + " after " + std::to_string(p.attempts) + " attempts";
        return out;
      }
      ++p.attempts;
      const double rto = im.rto_ms(im.agents[h]) * (double)(1u << (p.attempts - 1));
      p.deadline = now + std::chrono::duration_cast<Clock::duration>(
                             std::chrono::duration<double, std::milli>(rto));
      im.tr->send_to(im.agents[h].ep, p.frame);
      out.bytes_down += p.frame.size();
    }
  }
  return out;
}

void RemoteBackend::finish(bool success) {
  auto& im = *impl_;
  Message m;
  m.kind = success ? MsgKind::done : MsgKind::error;
  m.run_id = im.run_id;
  m.k = im.last_k;
  for (int pass = 0; pass < 2; ++pass) {
    for (auto& a : im.agents) {
      if (!a.registered) continue;
      m.agent_id = a.id;
      im.tr->send_to(a.ep, encode(m));
    }
  }
}

}  // namespace dopf::net
