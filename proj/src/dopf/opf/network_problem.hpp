#pragma once

#include <Eigen/Dense>

#include "dopf/model/case.hpp"
#include "dopf/nlp/problem.hpp"

namespace dopf::opf {

/// Tiny linear charge ($/kW per step) on reverse feeder flow p_g-. The tariff
/// model leaves p_g- out of the cost, which makes the dispatch non-unique
/// whenever the feeder could absorb surplus for free; this keeps the solution
/// at the no-flow vertex without visibly distorting the economics.
inline constexpr double kReverseFlowCost = 1e-3;

/// Flat-vector layout of the network subproblem: one contiguous slice per
/// timestep, each holding [v (non-slack), theta (non-slack), p_g+, p_g-,
/// q_g, p_hat (one per prosumer)].
struct NetworkIndex {
  int nb = 0, nh = 0, nt = 0;
  int n_per_t = 0, m_per_t = 0;
  int off_th = 0, off_pgp = 0, off_pgm = 0, off_qg = 0, off_phat = 0;

  int var_v(int t, int k) const { return t * n_per_t + k; }
  int var_th(int t, int k) const { return t * n_per_t + off_th + k; }
  int var_pgp(int t) const { return t * n_per_t + off_pgp; }
  int var_pgm(int t) const { return t * n_per_t + off_pgm; }
  int var_qg(int t) const { return t * n_per_t + off_qg; }
  int var_phat(int t, int h) const { return t * n_per_t + off_phat + h; }
  int n() const { return nt * n_per_t; }
  int m() const { return nt * m_per_t; }
};

struct NetworkProblem {
  nlp::NlpProblem nlp;
  NetworkIndex idx;
};

/// Eq-(9a)-style aggregator problem: AC power flow per timestep with the
/// consensus penalty sum rho/2 (p_hat - p)^2 + lambda (p_hat - p) on every
/// prosumer copy. p_targets and lambda are |H| x |T| in per-unit; warm_x0,
/// when given, replaces the flat start.
NetworkProblem build_network_subproblem(const model::Case& c, const Eigen::MatrixXd& p_targets,
                                        const Eigen::MatrixXd& lambda, double rho,
                                        const Eigen::VectorXd* warm_x0 = nullptr);

/// Network-side consensus profile p_hat as an |H| x |T| per-unit matrix.
/// Refuses solutions that are not locally optimal.
Eigen::MatrixXd extract_network_profile(const NetworkIndex& idx, const nlp::NlpSolution& sol);

/// Same profile in kW.
Eigen::MatrixXd extract_network_profile_kw(const NetworkIndex& idx, const nlp::NlpSolution& sol,
                                           const model::BaseValues& base);

}  // namespace dopf::opf
