#include "dopf/admm/ops.hpp"

#include <algorithm>
#include <cmath>

namespace dopf::admm {

double quantize_f32(double x) { return static_cast<double>(static_cast<float>(x)); }

Eigen::MatrixXd quantize_f32(const Eigen::MatrixXd& m) {
  return m.unaryExpr([](double v) { return quantize_f32(v); });
}

Eigen::MatrixXd dual_update(const CouplingState& s) {
  return s.lambda + s.rho * (s.p_hat - s.p);
}

Residuals residuals(const CouplingState& s, const Eigen::MatrixXd& p_prev) {
  Residuals r;
  r.r_norm = (s.p_hat - s.p).norm();
  r.s_norm = (s.p - p_prev).norm();
  return r;
}

Tolerances tolerances(const CouplingState& s, int n, double eps_abs, double eps_rel) {
  Tolerances t;
  const double root = std::sqrt(static_cast<double>(n));
  t.eps_pri = root * eps_abs + eps_rel * std::max(s.p_hat.norm(), s.p.norm());
  t.eps_dual = root * eps_abs + eps_rel * s.lambda.norm();
  return t;
}

bool check_termination(const Residuals& r, const Tolerances& t) {
  return r.r_norm <= t.eps_pri && r.s_norm <= t.eps_dual;
}

double adapt_rho(double rho, const Residuals& r, double mu, double tau_incr, double tau_decr) {
  if (r.r_norm > mu * r.s_norm) return rho * tau_incr;
  if (r.s_norm > mu * r.r_norm) return rho / tau_decr;
  return rho;
}

}  // namespace dopf::admm
