#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dopf/admm/types.hpp"

namespace dopf::admm {

inline constexpr const char* kHistoryHeader =
    "k,r_norm,s_norm,eps_pri,eps_dual,rho,objective,t_9a_ms,t_9b_ms,t_9c_ms,bytes_up,bytes_down";

/// Convergence history CSV. Doubles are written with enough digits to
/// round-trip exactly.
void write_history_csv(std::ostream& os, const std::vector<IterationRecord>& hist);
void write_history_csv(const std::string& path, const std::vector<IterationRecord>& hist);

/// Throws std::runtime_error on a malformed header or row.
std::vector<IterationRecord> read_history_csv(std::istream& is);
std::vector<IterationRecord> read_history_csv(const std::string& path);

}  // namespace dopf::admm
