#pragma once

#include <Eigen/Dense>

#include "dopf/admm/types.hpp"

namespace dopf::admm {

/// Round a value (or every entry) to the nearest float32 and back. Exchanged
/// iterates pass through this in every deployment mode.
double quantize_f32(double x);
Eigen::MatrixXd quantize_f32(const Eigen::MatrixXd& m);

/// lambda' = lambda + rho * (p_hat - p)
Eigen::MatrixXd dual_update(const CouplingState& s);

struct Residuals {
  double r_norm = 0.0;  // ||p_hat - p||_2 over the flattened arrays
  double s_norm = 0.0;  // ||p - p_prev||_2
};

Residuals residuals(const CouplingState& s, const Eigen::MatrixXd& p_prev);

struct Tolerances {
  double eps_pri = 0.0;
  double eps_dual = 0.0;
};

/// n is the coupling dimension |H| * |T|.
Tolerances tolerances(const CouplingState& s, int n, double eps_abs, double eps_rel);

bool check_termination(const Residuals& r, const Tolerances& t);

/// Residual balancing: grow rho when the primal residual dominates, shrink it
/// when the dual residual does. No rescaling of lambda.
double adapt_rho(double rho, const Residuals& r, double mu, double tau_incr, double tau_decr);

}  // namespace dopf::admm
