#include "dopf/harness/loopback.hpp"

#include <chrono>
#include <cmath>
#include <thread>

namespace dopf::harness {

namespace {

using Clock = std::chrono::steady_clock;

double mean_iter_ms(const std::vector<admm::IterationRecord>& hist) {
  if (hist.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : hist) s += r.t_9a_ms + r.t_9b_ms + r.t_9c_ms;
  return s / (double)hist.size();
}

}  // namespace

LoopbackRun run_loopback(const model::Case& c, const admm::AdmmConfig& cfg,
                         const LoopbackOptions& opts) {
  LoopbackRun out;
  const int nh = (int)c.prosumers.size();
  out.agents.resize(nh);

  net::AggregatorConfig acfg;
  acfg.bind = net::parse_endpoint("127.0.0.1:0");
  acfg.reg_timeout_ms = opts.reg_timeout_ms;
  acfg.initial_rto_ms = opts.initial_rto_ms;
  acfg.link = opts.aggregator_link;
  net::RemoteBackend backend(c, acfg);
  const net::Endpoint server = backend.local();

  std::vector<std::thread> threads;
  threads.reserve(nh);
  for (int h = 0; h < nh; ++h) {
    net::AgentConfig agc;
    agc.server = server;
    agc.prosumer_id = c.prosumers[h].id;
    agc.reg_timeout_ms = opts.reg_timeout_ms;
    agc.idle_timeout_ms = opts.idle_timeout_ms;
    threads.emplace_back([&, h, agc] { out.agents[h] = net::run_agent(c, agc); });
  }

  const auto t0 = Clock::now();
  try {
    backend.register_agents();
    out.result = admm::run_admm(c, cfg, backend);
  } catch (const std::exception& e) {
    out.result.status = admm::RunStatus::transport_failure;
    out.result.message = e.what();
    backend.finish(false);  // wake any agents that did register
  }
  out.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();

  for (auto& th : threads) th.join();
  out.link_counters = backend.link_stats().snapshot();
  return out;
}

CommReport measure_comm_overhead(const model::Case& c, const admm::AdmmConfig& cfg,
                                 double latency_ms) {
  CommReport rep;
  rep.expected_ms = 2.0 * latency_ms;

  LoopbackOptions base_opts;
  auto base = run_loopback(c, cfg, base_opts);

  LoopbackOptions shaped_opts;
  shaped_opts.aggregator_link = net::LinkModel::fixed(latency_ms);
  // a deployment sizes its timeout to the known path RTT; keep retransmits out
  shaped_opts.initial_rto_ms = (int)(4.0 * latency_ms) + 200;
  auto shaped = run_loopback(c, cfg, shaped_opts);

  rep.base_iter_ms = mean_iter_ms(base.result.history);
  rep.shaped_iter_ms = mean_iter_ms(shaped.result.history);
  rep.overhead_ms = rep.shaped_iter_ms - rep.base_iter_ms;
  rep.latency_share = rep.shaped_iter_ms > 0.0 ? rep.overhead_ms / rep.shaped_iter_ms : 0.0;
  rep.k_base = base.result.iterations();
  rep.k_shaped = shaped.result.iterations();

  rep.histories_match = rep.k_base == rep.k_shaped && rep.k_base > 0;
  if (rep.histories_match) {
    for (int i = 0; i < rep.k_base; ++i) {
      const double a = base.result.history[i].r_norm;
      const double b = shaped.result.history[i].r_norm;
      if (std::abs(a - b) > 1e-6 * std::max({1.0, std::abs(a), std::abs(b)})) {
        rep.histories_match = false;
        break;
      }
    }
  }
  return rep;
}

}  // namespace dopf::harness
