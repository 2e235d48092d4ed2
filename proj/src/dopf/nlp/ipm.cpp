#include <cmath>
#include <cstdio>
#include <limits>

#include "dopf/nlp/kkt.hpp"
#include "dopf/nlp/problem.hpp"

namespace dopf::nlp {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::max_iter: return "max_iter";
    case SolveStatus::infeasible_detected: return "infeasible_detected";
    case SolveStatus::solver_error: return "solver_error";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTau = 0.995;   // fraction-to-boundary
constexpr double kKappaZ = 1e10; // bound-multiplier safeguard band

struct Evaluator {
  const NlpProblem& p;
  VectorXd c(const VectorXd& x) const {
    return p.m > 0 ? p.eq_cons(x) : VectorXd::Zero(0);
  }
  MatrixXd J(const VectorXd& x) const {
    return p.m > 0 ? p.eq_jacobian(x) : MatrixXd::Zero(0, p.n);
  }
};

VectorXd push_interior(const NlpProblem& p) {
  VectorXd x = p.x0;
  for (int i = 0; i < p.n; ++i) {
    double lo = p.lo[i], hi = p.hi[i];
    bool flo = std::isfinite(lo), fhi = std::isfinite(hi);
    if (flo && fhi) {
      double pad = std::min(1e-2 * std::max(1.0, std::abs(lo)), 1e-2 * (hi - lo));
      double pad2 = std::min(1e-2 * std::max(1.0, std::abs(hi)), 1e-2 * (hi - lo));
      x[i] = std::min(std::max(x[i], lo + pad), hi - pad2);
    } else if (flo) {
      x[i] = std::max(x[i], lo + 1e-2 * std::max(1.0, std::abs(lo)));
    } else if (fhi) {
      x[i] = std::min(x[i], hi - 1e-2 * std::max(1.0, std::abs(hi)));
    }
  }
  return x;
}

NlpSolution solve_dense(const NlpProblem& p, const SolveOptions& opts) {
  const int n = p.n, m = p.m;
  Evaluator ev{p};

  NlpSolution sol;
  sol.x = push_interior(p);
  sol.nu = VectorXd::Zero(m);
  sol.z_lo = VectorXd::Zero(n);
  sol.z_hi = VectorXd::Zero(n);

  VectorXd& x = sol.x;
  VectorXd& nu = sol.nu;
  VectorXd& zl = sol.z_lo;
  VectorXd& zh = sol.z_hi;

  double mu = opts.mu0;
  const double mu_floor = opts.tol / 20.0;
  for (int i = 0; i < n; ++i) {
    if (std::isfinite(p.lo[i])) zl[i] = std::min(1e4, std::max(1e-4, mu / (x[i] - p.lo[i])));
    if (std::isfinite(p.hi[i])) zh[i] = std::min(1e4, std::max(1e-4, mu / (p.hi[i] - x[i])));
  }

  double zeta = 1.0;      // l1 merit weight
  double dw_last = 0.0;   // last successful Hessian regularization
  int tiny_steps = 0;

  auto barrier = [&](const VectorXd& xx) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      if (std::isfinite(p.lo[i])) {
        double d = xx[i] - p.lo[i];
        if (d <= 0.0) return kInf;
        s -= std::log(d);
      }
      if (std::isfinite(p.hi[i])) {
        double d = p.hi[i] - xx[i];
        if (d <= 0.0) return kInf;
        s -= std::log(d);
      }
    }
    return s;
  };
  auto merit = [&](const VectorXd& xx) {
    double b = barrier(xx);
    if (!std::isfinite(b)) return kInf;
    return p.objective(xx) + mu * b + zeta * ev.c(xx).lpNorm<1>();
  };

  sol.status = SolveStatus::max_iter;
  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    VectorXd g = p.gradient(x);
    VectorXd c = ev.c(x);
    MatrixXd J = ev.J(x);

    VectorXd rd = g - zl + zh;
    if (m > 0) rd.noalias() += J.transpose() * nu;

    double compl0 = 0.0;
    auto barrier_err = [&](double mm) {
      double e = std::max(rd.lpNorm<Eigen::Infinity>(),
                          m > 0 ? c.lpNorm<Eigen::Infinity>() : 0.0);
      for (int i = 0; i < n; ++i) {
        if (std::isfinite(p.lo[i])) e = std::max(e, std::abs((x[i] - p.lo[i]) * zl[i] - mm));
        if (std::isfinite(p.hi[i])) e = std::max(e, std::abs((p.hi[i] - x[i]) * zh[i] - mm));
      }
      return e;
    };
    for (int i = 0; i < n; ++i) {
      if (std::isfinite(p.lo[i])) compl0 = std::max(compl0, (x[i] - p.lo[i]) * zl[i]);
      if (std::isfinite(p.hi[i])) compl0 = std::max(compl0, (p.hi[i] - x[i]) * zh[i]);
    }
    sol.kkt.stationarity = rd.lpNorm<Eigen::Infinity>();
    sol.kkt.feasibility = m > 0 ? c.lpNorm<Eigen::Infinity>() : 0.0;
    sol.kkt.complementarity = compl0;

    double e0 = std::max({sol.kkt.stationarity, sol.kkt.feasibility, compl0});
    if (e0 <= opts.tol) {
      sol.status = SolveStatus::optimal;
      break;
    }
    while (mu > mu_floor && barrier_err(mu) <= opts.kappa_eps * mu)
      mu = std::max(mu_floor, mu / 10.0);

    // Newton system on the barrier KKT conditions, condensed to (dx, dnu).
    VectorXd grad_phi = g;
    VectorXd sigma = VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      if (std::isfinite(p.lo[i])) {
        grad_phi[i] -= mu / (x[i] - p.lo[i]);
        sigma[i] += zl[i] / (x[i] - p.lo[i]);
      }
      if (std::isfinite(p.hi[i])) {
        grad_phi[i] += mu / (p.hi[i] - x[i]);
        sigma[i] += zh[i] / (p.hi[i] - x[i]);
      }
    }

    MatrixXd W = p.lagrangian_hessian(x, nu);
    VectorXd rhs(n + m);
    rhs.head(n) = -grad_phi;
    if (m > 0) {
      rhs.head(n).noalias() -= J.transpose() * nu;
      rhs.tail(m) = -c;
    }

    SymIndefSolver ldl;
    double dw = 0.0, dc = 0.0;
    bool factored = false;
    MatrixXd K;
    for (int attempt = 0; attempt < 20; ++attempt) {
      K = MatrixXd::Zero(n + m, n + m);
      K.topLeftCorner(n, n) = W;
      K.topLeftCorner(n, n).diagonal() += sigma;
      K.topLeftCorner(n, n).diagonal().array() += dw;
      if (m > 0) {
        K.bottomLeftCorner(m, n) = J;
        K.bottomRightCorner(m, m).diagonal().array() -= dc;
      }
      bool ok = ldl.factor(K);
      const Inertia& in = ldl.inertia();
      if (ok && !ldl.singular() && in.n_pos == n && in.n_neg == m) {
        factored = true;
        break;
      }
      if (!ok || ldl.singular()) dc = (dc == 0.0) ? 1e-8 : dc * 100.0;
      dw = (dw == 0.0) ? std::max(1e-4, dw_last / 3.0) : dw * 10.0;
      if (dw > 1e12) break;
    }
    if (!factored) {
      sol.status = SolveStatus::solver_error;
      sol.message = "KKT factorization failed after regularization";
      break;
    }
    dw_last = dw;

    VectorXd step = ldl.solve(rhs);
    // One round of iterative refinement: the condensed diagonal spans many
    // orders of magnitude near active bounds and eats half the step's digits.
    {
      VectorXd resid = rhs - K.selfadjointView<Eigen::Lower>() * step;
      step += ldl.solve(resid);
    }
    VectorXd dx = step.head(n);
    VectorXd dnu = m > 0 ? VectorXd(step.tail(m)) : VectorXd::Zero(0);

    VectorXd dzl = VectorXd::Zero(n), dzh = VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      if (std::isfinite(p.lo[i])) {
        double s = x[i] - p.lo[i];
        dzl[i] = mu / s - zl[i] - zl[i] / s * dx[i];
      }
      if (std::isfinite(p.hi[i])) {
        double s = p.hi[i] - x[i];
        dzh[i] = mu / s - zh[i] + zh[i] / s * dx[i];
      }
    }

    double a_pri = 1.0, a_z = 1.0;
    for (int i = 0; i < n; ++i) {
      if (std::isfinite(p.lo[i]) && dx[i] < 0.0)
        a_pri = std::min(a_pri, -kTau * (x[i] - p.lo[i]) / dx[i]);
      if (std::isfinite(p.hi[i]) && dx[i] > 0.0)
        a_pri = std::min(a_pri, kTau * (p.hi[i] - x[i]) / dx[i]);
      if (dzl[i] < 0.0) a_z = std::min(a_z, -kTau * zl[i] / dzl[i]);
      if (dzh[i] < 0.0) a_z = std::min(a_z, -kTau * zh[i] / dzh[i]);
    }

    // l1 merit line search (Armijo)
    double theta = c.lpNorm<1>();
    double pred = grad_phi.dot(dx);
    if (m > 0) {
      double z_need = (nu + dnu).lpNorm<Eigen::Infinity>() * 1.5 + 1e-3;
      zeta = std::max(zeta, z_need);
      if (pred - zeta * theta > -1e-16 && theta > 1e-12)
        zeta = std::max(zeta, (pred + 1e-8) / theta + z_need);
    }
    double dphi = pred - zeta * theta;

    double phi0 = merit(x);
    double alpha = a_pri;
    bool relaxed = false;
    double phi1 = kInf;
    VectorXd dx_take, dnu_take;
    bool took_soc = false;
    int soc_tries = 0;
    for (int ls = 0; ls < 40; ++ls) {
      phi1 = merit(x + alpha * dx);
      if (phi1 <= phi0 + 1e-4 * alpha * dphi) break;
      // Second-order correction: the step often trades a tiny merit gain
      // against quadratic constraint violation, and along flat valleys the
      // merit minimum sits at an interior alpha, so re-aim the constraints
      // with the factorization we already have at each trial length.
      if (soc_tries < 8 && m > 0) {
        ++soc_tries;
        VectorXd rhs2 = VectorXd::Zero(n + m);
        rhs2.tail(m) = -ev.c(x + alpha * dx);
        VectorXd soc = ldl.solve(rhs2);
        soc += ldl.solve(VectorXd(rhs2 - K.selfadjointView<Eigen::Lower>() * soc));
        VectorXd dxc = alpha * dx + soc.head(n);
        double a2 = 1.0;
        for (int i = 0; i < n; ++i) {
          if (std::isfinite(p.lo[i]) && dxc[i] < 0.0)
            a2 = std::min(a2, -kTau * (x[i] - p.lo[i]) / dxc[i]);
          if (std::isfinite(p.hi[i]) && dxc[i] > 0.0)
            a2 = std::min(a2, kTau * (p.hi[i] - x[i]) / dxc[i]);
        }
        double phi2 = merit(x + a2 * dxc);
        if (phi2 <= phi0 + 1e-4 * alpha * dphi) {
          dx_take = a2 * dxc;
          dnu_take = a2 * (alpha * dnu + soc.tail(m));
          phi1 = phi2;
          took_soc = true;
          break;
        }
      }
      alpha *= 0.5;
      if (ls == 39) relaxed = true;
    }
    if (!took_soc) {
      dx_take = alpha * dx;
      dnu_take = m > 0 ? VectorXd(alpha * dnu) : VectorXd::Zero(0);
    }

    x += dx_take;
    if (m > 0) nu += dnu_take;
    zl += a_z * dzl;
    zh += a_z * dzh;
    for (int i = 0; i < n; ++i) {
      if (std::isfinite(p.lo[i])) {
        double s = x[i] - p.lo[i];
        zl[i] = std::min(std::max(zl[i], mu / (kKappaZ * s)), kKappaZ * mu / s);
      }
      if (std::isfinite(p.hi[i])) {
        double s = p.hi[i] - x[i];
        zh[i] = std::min(std::max(zh[i], mu / (kKappaZ * s)), kKappaZ * mu / s);
      }
    }

    if (opts.trace)
      std::fprintf(stderr, "ipm %4d mu=%8.2e E0=%9.3e a=%8.2e merit %13.6e -> %13.6e dw=%7.1e%s\n",
                   iter, mu, e0, alpha, phi0, phi1, dw, relaxed ? " relaxed" : "");
    if (opts.on_iter) opts.on_iter({iter, mu, alpha, phi0, phi1, relaxed});

    if (alpha < 1e-11) {
      if (++tiny_steps >= 3 && sol.kkt.feasibility > 100.0 * opts.tol) {
        sol.status = SolveStatus::infeasible_detected;
        sol.message = "step collapse with infeasible equalities";
        break;
      }
    } else {
      tiny_steps = 0;
    }
  }

  sol.iterations = iter;
  sol.objective = p.objective(x);
  return sol;
}

struct FixedSplit {
  std::vector<int> free_idx, fixed_idx;
};

FixedSplit split_fixed(const NlpProblem& p) {
  FixedSplit s;
  for (int i = 0; i < p.n; ++i) {
    if (std::isfinite(p.lo[i]) && std::isfinite(p.hi[i]) && p.hi[i] - p.lo[i] < 1e-12)
      s.fixed_idx.push_back(i);
    else
      s.free_idx.push_back(i);
  }
  return s;
}

// Variables with lo == hi are eliminated before the interior-point loop
// (no strict interior exists for them); their bound multiplier is recovered
// from the stationarity residual afterwards.
NlpSolution solve_with_fixed(const NlpProblem& p, const SolveOptions& opts) {
  FixedSplit fs = split_fixed(p);
  if (fs.fixed_idx.empty()) return solve_dense(p, opts);

  const auto& fr = fs.free_idx;
  const int nr = (int)fr.size();
  Evaluator ev{p};

  auto embed = [&](const VectorXd& xr) {
    VectorXd xf(p.n);
    for (int f : fs.fixed_idx) xf[f] = p.lo[f];
    for (int i = 0; i < nr; ++i) xf[fr[i]] = xr[i];
    return xf;
  };

  NlpProblem r;
  r.n = nr;
  r.m = p.m;
  r.objective = [&, embed](const VectorXd& xr) { return p.objective(embed(xr)); };
  r.gradient = [&, embed](const VectorXd& xr) { return VectorXd(p.gradient(embed(xr))(fr)); };
  r.lagrangian_hessian = [&, embed](const VectorXd& xr, const VectorXd& nu) {
    return MatrixXd(p.lagrangian_hessian(embed(xr), nu)(fr, fr));
  };
  if (p.m > 0) {
    r.eq_cons = [&, embed](const VectorXd& xr) { return p.eq_cons(embed(xr)); };
    r.eq_jacobian = [&, embed](const VectorXd& xr) {
      return MatrixXd(p.eq_jacobian(embed(xr))(Eigen::all, fr));
    };
  }
  r.lo = p.lo(fr);
  r.hi = p.hi(fr);
  r.x0 = p.x0(fr);

  NlpSolution rs = solve_dense(r, opts);

  NlpSolution sol;
  sol.status = rs.status;
  sol.kkt = rs.kkt;
  sol.iterations = rs.iterations;
  sol.message = rs.message;
  sol.x = embed(rs.x);
  sol.nu = rs.nu;
  sol.z_lo = VectorXd::Zero(p.n);
  sol.z_hi = VectorXd::Zero(p.n);
  for (int i = 0; i < nr; ++i) {
    sol.z_lo[fr[i]] = rs.z_lo[i];
    sol.z_hi[fr[i]] = rs.z_hi[i];
  }
  VectorXd stat = p.gradient(sol.x);
  if (p.m > 0) stat.noalias() += ev.J(sol.x).transpose() * sol.nu;
  for (int i : fs.fixed_idx) {
    if (stat[i] >= 0.0)
      sol.z_lo[i] = stat[i];
    else
      sol.z_hi[i] = -stat[i];
  }
  sol.objective = p.objective(sol.x);
  return sol;
}

SolveStatus worse(SolveStatus a, SolveStatus b) {
  auto rank = [](SolveStatus s) {
    switch (s) {
      case SolveStatus::optimal: return 0;
      case SolveStatus::max_iter: return 1;
      case SolveStatus::infeasible_detected: return 2;
      case SolveStatus::solver_error: return 3;
    }
    return 3;
  };
  return rank(a) >= rank(b) ? a : b;
}

NlpSolution solve_partitioned(const NlpProblem& p, const SolveOptions& opts) {
  NlpSolution sol;
  sol.x = VectorXd::Zero(p.n);
  sol.nu = VectorXd::Zero(p.m);
  sol.z_lo = VectorXd::Zero(p.n);
  sol.z_hi = VectorXd::Zero(p.n);
  sol.status = SolveStatus::optimal;
  double obj_sum = 0.0;

  for (const auto& blk : p.partition) {
    NlpProblem sub = *blk.sub;
    for (int i = 0; i < sub.n; ++i) sub.x0[i] = p.x0[blk.var_idx[i]];
    NlpSolution bs = solve_with_fixed(sub, opts);

    for (int i = 0; i < sub.n; ++i) {
      sol.x[blk.var_idx[i]] = bs.x[i];
      sol.z_lo[blk.var_idx[i]] = bs.z_lo[i];
      sol.z_hi[blk.var_idx[i]] = bs.z_hi[i];
    }
    for (int j = 0; j < sub.m; ++j) sol.nu[blk.con_idx[j]] = bs.nu[j];

    obj_sum += bs.objective;
    sol.kkt.stationarity = std::max(sol.kkt.stationarity, bs.kkt.stationarity);
    sol.kkt.feasibility = std::max(sol.kkt.feasibility, bs.kkt.feasibility);
    sol.kkt.complementarity = std::max(sol.kkt.complementarity, bs.kkt.complementarity);
    sol.iterations = std::max(sol.iterations, bs.iterations);
    if (bs.status != SolveStatus::optimal && sol.message.empty()) sol.message = bs.message;
    sol.status = worse(sol.status, bs.status);
  }
  sol.objective = p.objective ? p.objective(sol.x) : obj_sum;
  return sol;
}

}  // namespace

NlpSolution solve(const NlpProblem& p, const SolveOptions& opts) {
  if (!p.partition.empty()) return solve_partitioned(p, opts);
  return solve_with_fixed(p, opts);
}

void attach_partition_callbacks(NlpProblem& p) {
  auto part = p.partition;
  const int n = p.n, m = p.m;
  p.objective = [part](const VectorXd& x) {
    double s = 0.0;
    for (const auto& b : part) s += b.sub->objective(VectorXd(x(b.var_idx)));
    return s;
  };
  p.gradient = [part, n](const VectorXd& x) {
    VectorXd g = VectorXd::Zero(n);
    for (const auto& b : part) g(b.var_idx) = b.sub->gradient(VectorXd(x(b.var_idx)));
    return g;
  };
  p.lagrangian_hessian = [part, n](const VectorXd& x, const VectorXd& nu) {
    MatrixXd W = MatrixXd::Zero(n, n);
    for (const auto& b : part)
      W(b.var_idx, b.var_idx) =
          b.sub->lagrangian_hessian(VectorXd(x(b.var_idx)), VectorXd(nu(b.con_idx)));
    return W;
  };
  p.eq_cons = [part, m](const VectorXd& x) {
    VectorXd c = VectorXd::Zero(m);
    for (const auto& b : part)
      if (b.sub->m > 0) c(b.con_idx) = b.sub->eq_cons(VectorXd(x(b.var_idx)));
    return c;
  };
  p.eq_jacobian = [part, n, m](const VectorXd& x) {
    MatrixXd J = MatrixXd::Zero(m, n);
    for (const auto& b : part)
      if (b.sub->m > 0) J(b.con_idx, b.var_idx) = b.sub->eq_jacobian(VectorXd(x(b.var_idx)));
    return J;
  };
}

}  // namespace dopf::nlp
