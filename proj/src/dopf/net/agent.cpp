#include "dopf/net/agent.hpp"

#include <chrono>
#include <cstdlib>
#include <optional>

#include "dopf/net/wire.hpp"
#include "dopf/opf/prosumer_problem.hpp"

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

}  // namespace

void apply_env_overrides(AgentConfig& cfg) {
  cfg.reg_timeout_ms = env_int("DOPF_REG_TIMEOUT_MS", cfg.reg_timeout_ms);
  cfg.idle_timeout_ms = env_int("DOPF_IDLE_TIMEOUT_MS", cfg.idle_timeout_ms);
}

AgentOutcome run_agent(const model::Case& c, const AgentConfig& cfg) {
  AgentOutcome out;
  const model::ProsumerProfile* prof = nullptr;
  for (const auto& p : c.prosumers)
    if (p.id == cfg.prosumer_id) prof = &p;
  if (!prof) {
    out.message = "prosumer id " + std::to_string(cfg.prosumer_id) + " not in case";
    return out;
  }
  const int nt = c.horizon.steps;
  auto tr = with_link_model(make_udp_transport(), cfg.link);

  // registration
  std::uint64_t run_id = 0;
  {
    Message hello;
    hello.kind = MsgKind::hello;
    hello.agent_id = (std::uint16_t)cfg.prosumer_id;
    const auto frame = encode(hello);
    const auto deadline = Clock::now() + std::chrono::milliseconds(cfg.reg_timeout_ms);
    bool assigned = false;
    while (!assigned) {
      if (Clock::now() >= deadline) {
        out.message = "no ASSIGN from aggregator within registration window";
        return out;
      }
      tr->send_to(cfg.server, frame);
      auto d = tr->recv(cfg.hello_interval_ms);
      if (!d) continue;
      auto m = decode(d->bytes);
      if (m && m->kind == MsgKind::assign && m->agent_id == (std::uint16_t)cfg.prosumer_id) {
        run_id = m->run_id;
        assigned = true;
      }
    }
  }

  // serve loop
  std::uint32_t last_k = 0;
  bool have_cached = false;
  std::vector<std::uint8_t> cached_profile;

  for (;;) {
    auto d = tr->recv(cfg.idle_timeout_ms);
    if (!d) {
      out.message = "idle timeout waiting for aggregator";
      return out;
    }
    auto m = decode(d->bytes);
    if (!m) continue;
    if (m->run_id != run_id) continue;
    switch (m->kind) {
      case MsgKind::done:
        out.ok = true;
        out.message = "done";
        return out;
      case MsgKind::error:
        out.message = "aggregator aborted the run";
        return out;
      case MsgKind::targets: {
        if ((int)m->payload.size() != 2 * nt + 1) continue;
        if (have_cached && m->k == last_k) {  // duplicate: no re-solve
          tr->send_to(cfg.server, cached_profile);
          continue;
        }
        Eigen::VectorXd p_hat(nt), lambda(nt);
        for (int t = 0; t < nt; ++t) {
          p_hat[t] = (double)m->payload[t];
          lambda[t] = (double)m->payload[nt + t];
        }
        const double rho = (double)m->payload[2 * nt];
        auto r = opf::solve_prosumer(*prof, c.horizon, c.tariff, c.base, p_hat, lambda, rho);
        if (r.sol.status != nlp::SolveStatus::optimal) {
          Message err;
          err.kind = MsgKind::error;
          err.run_id = run_id;
          err.agent_id = (std::uint16_t)cfg.prosumer_id;
          err.k = m->k;
          tr->send_to(cfg.server, encode(err));
          out.message = "subproblem failed at k=" + std::to_string(m->k) + ": " + r.sol.message;
          return out;
        }
        Message reply;
        reply.kind = MsgKind::profile;
        reply.run_id = run_id;
        reply.agent_id = (std::uint16_t)cfg.prosumer_id;
        reply.k = m->k;
        reply.payload.resize(nt);
        for (int t = 0; t < nt; ++t) reply.payload[t] = (float)r.p[t];
        cached_profile = encode(reply);
        have_cached = true;
        last_k = m->k;
        ++out.rounds;
        tr->send_to(cfg.server, cached_profile);
        break;
      }
      default:
        break;  // stray HELLO/ASSIGN/PROFILE: ignore
    }
  }
}

}  // namespace dopf::net
