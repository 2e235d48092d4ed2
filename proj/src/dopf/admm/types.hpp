#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "dopf/nlp/problem.hpp"
#include "dopf/opf/network_problem.hpp"

namespace dopf::admm {

/// Consensus iterate shared by aggregator and prosumers. All arrays are
/// |H| x |T| and kept in per-unit; lambda follows the same convention
/// ($ per per-unit step). Exchanged values are float32-quantized so the
/// in-process and remote deployments walk identical iterate sequences.
struct CouplingState {
  Eigen::MatrixXd p_hat;
  Eigen::MatrixXd p;
  Eigen::MatrixXd lambda;
  double rho = 1.0;
};

struct AdmmConfig {
  double eps_abs = 1e-4;
  double eps_rel = 0.0;  // <= 0 means the default 10 * eps_abs
  double rho0 = 1.0;
  double mu = 10.0;        // residual-balancing trigger ratio
  double tau_incr = 2.0;
  double tau_decr = 2.0;
  int k_max = 500;
  int workers = 1;         // in-process prosumer solve parallelism
  nlp::SolveOptions nlp;   // network subproblem solver options

  double eps_rel_effective() const { return eps_rel > 0.0 ? eps_rel : 10.0 * eps_abs; }
};

struct IterationRecord {
  int k = 0;
  double r_norm = 0.0, s_norm = 0.0;
  double eps_pri = 0.0, eps_dual = 0.0;
  double rho = 0.0;
  double objective = 0.0;
  double t_9a_ms = 0.0, t_9b_ms = 0.0, t_9c_ms = 0.0;
  std::uint64_t bytes_up = 0, bytes_down = 0;
  // parallel-model prosumer time (max single solve in the round); kept in
  // memory for the size sweep, not part of the CSV schema
  double t_9b_max_ms = 0.0;
};

enum class RunStatus { converged, max_iter, transport_failure, solver_error };

const char* to_string(RunStatus s);

struct AdmmResult {
  RunStatus status = RunStatus::solver_error;
  Eigen::MatrixXd p_kw;      // final prosumer-side profiles, kW
  Eigen::MatrixXd p_hat_kw;  // final network-side copies, kW
  CouplingState state;       // final internal (per-unit) state
  std::vector<IterationRecord> history;
  double objective = 0.0;
  int failed_agent = -1;
  nlp::NlpSolution network_sol;  // last Eq-(9a) solution
  opf::NetworkIndex net_idx;
  std::string message;

  int iterations() const { return (int)history.size(); }
};

}  // namespace dopf::admm
