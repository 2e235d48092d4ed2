#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dopf/harness/sweeps.hpp"

namespace dopf::harness {

inline constexpr const char* kSweepHeader =
    "label,eps_abs,alpha_d,alpha_pv,size,status,k,r_norm,s_norm,eps_pri,eps_dual,objective,"
    "gap_percent,r_max_w,r_mean_w,mean_t9a_ms,mean_t9b_ms,mean_t9c_ms,mean_t9b_solo_ms,"
    "total_bytes_up,total_bytes_down,flag_undervoltage,flag_overvoltage,flag_feeder";

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);
std::vector<SweepRow> read_sweep_csv(std::istream& is);
std::vector<SweepRow> read_sweep_csv(const std::string& path);

/// Writes sweep.csv, one history-<label>.csv per executed run, and the
/// sweep's plots (two per non-empty sweep) into out_dir. Creates the
/// directory; throws on I/O failure.
void emit_report(const SweepResult& result, const std::string& out_dir);

}  // namespace dopf::harness
