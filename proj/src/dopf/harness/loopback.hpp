#pragma once

#include <vector>

#include "dopf/admm/engine.hpp"
#include "dopf/model/case.hpp"
#include "dopf/net/agent.hpp"
#include "dopf/net/aggregator.hpp"

namespace dopf::harness {

struct LoopbackOptions {
  net::LinkModel aggregator_link;  // shaping at the aggregator socket (both directions)
  int reg_timeout_ms = 15000;
  int initial_rto_ms = 200;
  int idle_timeout_ms = 30000;
};

struct LoopbackRun {
  admm::AdmmResult result;
  std::vector<net::AgentOutcome> agents;  // one per prosumer, case order
  double wall_ms = 0.0;
  net::LinkCounters link_counters;        // aggregator-side shaping counters
};

/// Full distributed stack on 127.0.0.1: one aggregator socket plus one agent
/// thread per prosumer in the case.
LoopbackRun run_loopback(const model::Case& c, const admm::AdmmConfig& cfg,
                         const LoopbackOptions& opts = {});

struct CommReport {
  double base_iter_ms = 0.0, shaped_iter_ms = 0.0;
  double overhead_ms = 0.0;  // shaped - base, per iteration
  double expected_ms = 0.0;  // 2 x one-way latency: TARGETS down + PROFILE up
  double latency_share = 0.0;
  int k_base = 0, k_shaped = 0;
  bool histories_match = false;  // per-iteration r_norm agrees within rel 1e-6
};

/// Runs the loopback stack twice, without and with a fixed one-way latency
/// injected in both directions. Shaping cannot change the iterates, so the
/// per-iteration time difference isolates the transport overhead.
CommReport measure_comm_overhead(const model::Case& c, const admm::AdmmConfig& cfg,
                                 double latency_ms);

}  // namespace dopf::harness
