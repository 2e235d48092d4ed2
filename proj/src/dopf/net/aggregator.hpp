#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dopf/admm/engine.hpp"
#include "dopf/model/case.hpp"
#include "dopf/net/link_model.hpp"
#include "dopf/net/transport.hpp"

namespace dopf::net {

struct AggregatorConfig {
  Endpoint bind{0, 0};  // 0.0.0.0:ephemeral
  int reg_timeout_ms = 30000;
  int initial_rto_ms = 200;  // used until an RTT sample exists
  int min_rto_ms = 20;
  int max_attempts = 5;  // first transmission included
  LinkModel link;
  std::uint64_t run_id = 0;  // 0 = pick one
};

/// Honors DOPF_REG_TIMEOUT_MS and DOPF_RTO_MS when set.
void apply_env_overrides(AggregatorConfig& cfg);

/// Aggregator-side prosumer backend: one UDP socket, a receive thread
/// feeding a message queue, and per-agent retransmission with a smoothed
/// RTT timeout (2x SRTT, doubled per attempt, at most max_attempts sends).
class RemoteBackend final : public admm::ProsumerBackend {
 public:
  RemoteBackend(const model::Case& c, const AggregatorConfig& cfg);
  ~RemoteBackend() override;

  /// Blocks until every prosumer in the case has said HELLO, answering each
  /// with ASSIGN. Throws std::runtime_error when the window expires.
  void register_agents();

  RoundResult solve_round(int k, const Eigen::MatrixXd& p_hat, const Eigen::MatrixXd& lambda,
                          double rho) override;
  void finish(bool success) override;

  Endpoint local() const;
  std::uint64_t run_id() const { return run_id_; }
  const LinkStats& link_stats() const { return link_stats_; }

 private:
  struct RxItem;
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::uint64_t run_id_ = 0;
  LinkStats link_stats_;
};

}  // namespace dopf::net
