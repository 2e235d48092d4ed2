#include "dopf/nlp/derivative_check.hpp"

#include <cmath>

namespace dopf::nlp {
namespace {

double rel_err(double a, double num) {
  return std::abs(a - num) / std::max({1.0, std::abs(a), std::abs(num)});
}

}  // namespace

DerivativeReport check_derivatives(const NlpProblem& p, const VectorXd& x,
                                   const VectorXd& nu, double step, double threshold) {
  DerivativeReport rep;
  auto note = [&](const char* kind, int i, int j, double a, double num, double& worst) {
    double e = rel_err(a, num);
    worst = std::max(worst, e);
    if (e > threshold) {
      rep.issues.push_back({kind, i, j, a, num, e});
      rep.pass = false;
    }
  };

  VectorXd g = p.gradient(x);
  for (int i = 0; i < p.n; ++i) {
    VectorXd xp = x, xm = x;
    xp[i] += step;
    xm[i] -= step;
    double num = (p.objective(xp) - p.objective(xm)) / (2.0 * step);
    note("gradient", 0, i, g[i], num, rep.max_gradient_err);
  }

  if (p.m > 0) {
    MatrixXd J = p.eq_jacobian(x);
    for (int i = 0; i < p.n; ++i) {
      VectorXd xp = x, xm = x;
      xp[i] += step;
      xm[i] -= step;
      VectorXd col = (p.eq_cons(xp) - p.eq_cons(xm)) / (2.0 * step);
      for (int r = 0; r < p.m; ++r) note("jacobian", r, i, J(r, i), col[r], rep.max_jacobian_err);
    }
  }

  // Lagrangian Hessian column i ~ d/dx_i of (grad f + J' nu).
  MatrixXd W = p.lagrangian_hessian(x, nu);
  auto lagr_grad = [&](const VectorXd& xx) {
    VectorXd lg = p.gradient(xx);
    if (p.m > 0) lg.noalias() += p.eq_jacobian(xx).transpose() * nu;
    return lg;
  };
  for (int i = 0; i < p.n; ++i) {
    VectorXd xp = x, xm = x;
    xp[i] += step;
    xm[i] -= step;
    VectorXd col = (lagr_grad(xp) - lagr_grad(xm)) / (2.0 * step);
    for (int r = 0; r < p.n; ++r) note("hessian", r, i, W(r, i), col[r], rep.max_hessian_err);
  }
  return rep;
}

}  // namespace dopf::nlp
