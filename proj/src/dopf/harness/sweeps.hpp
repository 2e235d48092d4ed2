#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "dopf/admm/engine.hpp"
#include "dopf/model/case.hpp"
#include "dopf/opf/network_problem.hpp"

namespace dopf::harness {

enum class SweepKind { tolerance, mix, size };

const char* to_string(SweepKind k);
SweepKind sweep_kind_from(const std::string& s);

struct SweepSpec {
  SweepKind kind = SweepKind::tolerance;
  std::string template_name = "minimal-4";
  std::string horizon_name = "T1/12";
  std::uint64_t seed = 1;
  // overrides template/horizon/seed for tolerance and mix sweeps
  std::shared_ptr<const model::Case> base_case;
  admm::AdmmConfig admm;  // eps_abs is overridden per point in tolerance sweeps
  bool loopback = false;  // run each point through the UDP loopback stack

  std::vector<double> tolerances = {1e-2, 5e-3, 1e-3, 5e-4, 1e-4, 5e-5, 1e-5, 5e-6, 1e-6};
  std::vector<std::pair<double, double>> mix_grid;  // empty = default grid
  std::vector<int> sizes = {2, 4, 8, 16};
  bool centralized_oracle = true;
};

/// Default congestion grid: alpha_d x alpha_pv.
std::vector<std::pair<double, double>> default_mix_grid();

struct SweepRow {
  std::string label;
  double eps_abs = 0.0;
  double alpha_d = 1.0, alpha_pv = 1.0;
  int size = 0;
  std::string status;
  int k = 0;
  double r_norm = 0.0, s_norm = 0.0, eps_pri = 0.0, eps_dual = 0.0;
  double objective = 0.0;
  double gap_percent = 0.0;  // NaN when no centralized oracle exists
  double r_max_w = 0.0, r_mean_w = 0.0;
  double mean_t9a_ms = 0.0, mean_t9b_ms = 0.0, mean_t9c_ms = 0.0;
  // parallel-model prosumer time: mean over iterations of the slowest
  // single solve in the round
  double mean_t9b_solo_ms = 0.0;
  std::uint64_t total_bytes_up = 0, total_bytes_down = 0;
  bool flag_undervoltage = false, flag_overvoltage = false, flag_feeder = false;
};

/// Field-for-field equality with NaN == NaN (CSV roundtrip checks).
bool rows_equal(const SweepRow& a, const SweepRow& b);

struct SweepResult {
  SweepKind kind = SweepKind::tolerance;
  std::vector<SweepRow> rows;
  std::vector<std::vector<admm::IterationRecord>> histories;  // parallel to rows
  double centralized_objective = 0.0;      // NaN when skipped
  double t9a_slope_ms_per_prosumer = 0.0;  // size sweeps only, else NaN
  bool any_failed = false;
  std::vector<std::string> notes;
};

/// Centralized solves are only attempted below this variable count; the
/// dense KKT factorization makes larger instances impractical here.
inline constexpr long kCentralizedVarLimit = 1200;

/// Solves Eq-(5) directly; returns NaN (and a note) when the case exceeds
/// kCentralizedVarLimit or the solve fails.
double centralized_objective(const model::Case& c, std::string* note = nullptr);

struct ConstraintFlags {
  bool undervoltage = false, overvoltage = false, feeder = false;
};

/// Binding-constraint scan of a converged network solution: any voltage
/// within tol of its bound, or feeder exchange within tol of its limit.
ConstraintFlags binding_flags(const model::Case& c, const opf::NetworkIndex& idx,
                              const Eigen::VectorXd& x, double tol = 1e-6);

SweepResult run_tolerance_sweep(const SweepSpec& spec);
SweepResult run_mix_sweep(const SweepSpec& spec);
SweepResult run_size_sweep(const SweepSpec& spec);
SweepResult run_sweep(const SweepSpec& spec);

}  // namespace dopf::harness
