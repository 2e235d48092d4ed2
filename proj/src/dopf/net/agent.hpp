#pragma once

#include <string>

#include "dopf/model/case.hpp"
#include "dopf/net/link_model.hpp"
#include "dopf/net/transport.hpp"

namespace dopf::net {

struct AgentConfig {
  Endpoint server;
  int prosumer_id = 0;
  int hello_interval_ms = 500;
  int reg_timeout_ms = 30000;
  int idle_timeout_ms = 60000;
  LinkModel link;
};

/// Honors DOPF_REG_TIMEOUT_MS and DOPF_IDLE_TIMEOUT_MS when set.
void apply_env_overrides(AgentConfig& cfg);

struct AgentOutcome {
  bool ok = false;
  std::string message;
  int rounds = 0;
};

/// Edge-agent loop: HELLO until ASSIGN, then serve TARGETS -> PROFILE until
/// DONE. Duplicated TARGETS for an already-solved k re-send the cached
/// PROFILE without solving again. Blocks until the run ends or a timeout.
AgentOutcome run_agent(const model::Case& c, const AgentConfig& cfg);

}  // namespace dopf::net
