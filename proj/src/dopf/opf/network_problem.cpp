#include "dopf/opf/network_problem.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "dopf/opf/grid.hpp"

namespace dopf::opf {

using nlp::NlpProblem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Everything one timestep's sub-problem needs, shared by its callbacks.
struct PeriodCtx {
  std::shared_ptr<const Grid> grid;
  NetworkIndex idx;  // offsets reused for the local (single-period) layout
  std::vector<int> phat_bus;      // prosumer order -> bus position
  VectorXd q_fixed;               // nb, per-unit reactive demand at this t
  VectorXd lam, ptgt;             // nh
  double rho = 0.0;
  double c2 = 0.0, c1 = 0.0, c0 = 0.0, c_rev = 0.0;

  void unpack(const VectorXd& x, VectorXd& v, VectorXd& th) const {
    const Grid& g = *grid;
    v = VectorXd::Ones(g.nb);
    th = VectorXd::Zero(g.nb);
    for (int k = 0; k < (int)g.non_slack.size(); ++k) {
      v[g.non_slack[k]] = x[k];
      th[g.non_slack[k]] = x[idx.off_th + k];
    }
  }

  double objective(const VectorXd& x) const {
    double pgp = x[idx.off_pgp];
    double s = c2 * pgp * pgp + c1 * pgp + c0 + c_rev * x[idx.off_pgm];
    for (int h = 0; h < idx.nh; ++h) {
      double d = x[idx.off_phat + h] - ptgt[h];
      s += 0.5 * rho * d * d + lam[h] * d;
    }
    return s;
  }

  VectorXd gradient(const VectorXd& x) const {
    VectorXd g = VectorXd::Zero(idx.n_per_t);
    g[idx.off_pgp] = 2.0 * c2 * x[idx.off_pgp] + c1;
    g[idx.off_pgm] = c_rev;
    for (int h = 0; h < idx.nh; ++h)
      g[idx.off_phat + h] = rho * (x[idx.off_phat + h] - ptgt[h]) + lam[h];
    return g;
  }

  VectorXd constraints(const VectorXd& x) const {
    const Grid& g = *grid;
    VectorXd v, th;
    unpack(x, v, th);
    VectorXd p, q;
    g.injections(v, th, p, q);

    VectorXd c(idx.m_per_t);
    for (int i = 0; i < g.nb; ++i) {
      double spec_p = 0.0, spec_q = -q_fixed[i];
      if (i == g.slack) {
        spec_p = x[idx.off_pgp] - x[idx.off_pgm];
        spec_q = x[idx.off_qg];
      }
      c[i] = p[i] - spec_p;
      c[g.nb + i] = q[i] - spec_q;
    }
    for (int h = 0; h < idx.nh; ++h) c[phat_bus[h]] += x[idx.off_phat + h];
    return c;
  }

  MatrixXd jacobian(const VectorXd& x) const {
    const Grid& g = *grid;
    VectorXd v, th;
    unpack(x, v, th);
    MatrixXd dpv, dpt, dqv, dqt;
    g.jacobians(v, th, dpv, dpt, dqv, dqt);

    MatrixXd J = MatrixXd::Zero(idx.m_per_t, idx.n_per_t);
    for (int i = 0; i < g.nb; ++i) {
      for (int k = 0; k < (int)g.non_slack.size(); ++k) {
        int b = g.non_slack[k];
        J(i, k) = dpv(i, b);
        J(i, idx.off_th + k) = dpt(i, b);
        J(g.nb + i, k) = dqv(i, b);
        J(g.nb + i, idx.off_th + k) = dqt(i, b);
      }
    }
    J(g.slack, idx.off_pgp) = -1.0;
    J(g.slack, idx.off_pgm) = 1.0;
    J(g.nb + g.slack, idx.off_qg) = -1.0;
    for (int h = 0; h < idx.nh; ++h) J(phat_bus[h], idx.off_phat + h) = 1.0;
    return J;
  }

  MatrixXd hessian(const VectorXd& x, const VectorXd& nu) const {
    const Grid& g = *grid;
    VectorXd v, th;
    unpack(x, v, th);
    MatrixXd Hvt = g.weighted_hessian(v, th, nu.head(g.nb), nu.segment(g.nb, g.nb));

    MatrixXd W = MatrixXd::Zero(idx.n_per_t, idx.n_per_t);
    const int K = (int)g.non_slack.size();
    for (int a = 0; a < K; ++a) {
      int ba = g.non_slack[a];
      for (int b = 0; b < K; ++b) {
        int bb = g.non_slack[b];
        W(a, b) = Hvt(ba, bb);
        W(a, idx.off_th + b) = Hvt(ba, g.nb + bb);
        W(idx.off_th + a, b) = Hvt(g.nb + ba, bb);
        W(idx.off_th + a, idx.off_th + b) = Hvt(g.nb + ba, g.nb + bb);
      }
    }
    W(idx.off_pgp, idx.off_pgp) += 2.0 * c2;
    for (int h = 0; h < idx.nh; ++h) W(idx.off_phat + h, idx.off_phat + h) += rho;
    return W;
  }
};

}  // namespace

NetworkProblem build_network_subproblem(const model::Case& c, const Eigen::MatrixXd& p_targets,
                                        const Eigen::MatrixXd& lambda, double rho,
                                        const Eigen::VectorXd* warm_x0) {
  const int nh = (int)c.prosumers.size();
  const int nt = c.horizon.steps;
  if (p_targets.rows() != nh || p_targets.cols() != nt || lambda.rows() != nh ||
      lambda.cols() != nt)
    throw std::invalid_argument("consensus arrays must be |H| x |T|");

  auto grid = std::make_shared<Grid>(Grid::from_case(c));
  const int nb = grid->nb;

  NetworkIndex idx;
  idx.nb = nb;
  idx.nh = nh;
  idx.nt = nt;
  idx.off_th = nb - 1;
  idx.off_pgp = 2 * (nb - 1);
  idx.off_pgm = idx.off_pgp + 1;
  idx.off_qg = idx.off_pgp + 2;
  idx.off_phat = idx.off_pgp + 3;
  idx.n_per_t = idx.off_phat + nh;
  idx.m_per_t = 2 * nb;

  const double S = c.base.s_base_kva;
  std::vector<int> phat_bus(nh);
  for (int h = 0; h < nh; ++h) phat_bus[h] = grid->pos_of_id.at(c.prosumers[h].bus_id);

  // Per-period bounds and flat start share one local template.
  VectorXd lo_t = VectorXd::Constant(idx.n_per_t, -kInf);
  VectorXd hi_t = VectorXd::Constant(idx.n_per_t, kInf);
  VectorXd x0_t = VectorXd::Zero(idx.n_per_t);
  for (int k = 0; k < nb - 1; ++k) {
    const auto& bus = c.buses[grid->non_slack[k]];
    lo_t[k] = bus.v_min;
    hi_t[k] = bus.v_max;
    x0_t[k] = 1.0;
  }
  lo_t[idx.off_pgp] = 0.0;
  hi_t[idx.off_pgp] = std::max(0.0, c.gen.p_max_kw / S);
  lo_t[idx.off_pgm] = 0.0;
  hi_t[idx.off_pgm] = std::max(0.0, -c.gen.p_min_kw / S);
  lo_t[idx.off_qg] = c.gen.q_min_kvar / S;
  hi_t[idx.off_qg] = c.gen.q_max_kvar / S;
  for (int h = 0; h < nh; ++h) {
    lo_t[idx.off_phat + h] = c.prosumers[h].p_min_kw / S;
    hi_t[idx.off_phat + h] = c.prosumers[h].p_max_kw / S;
  }

  NetworkProblem out;
  out.idx = idx;
  NlpProblem& p = out.nlp;
  p.n = idx.n();
  p.m = idx.m();
  p.lo.resize(p.n);
  p.hi.resize(p.n);
  p.x0.resize(p.n);

  for (int t = 0; t < nt; ++t) {
    auto ctx = std::make_shared<PeriodCtx>();
    ctx->grid = grid;
    ctx->idx = idx;
    ctx->phat_bus = phat_bus;
    ctx->q_fixed = VectorXd::Zero(nb);
    for (int h = 0; h < nh; ++h) ctx->q_fixed[phat_bus[h]] += c.prosumers[h].q_demand_kvar[t] / S;
    ctx->lam = lambda.col(t);
    ctx->ptgt = p_targets.col(t);
    ctx->rho = rho;
    ctx->c2 = c.gen.c2 * S * S;
    ctx->c1 = c.gen.c1 * S;
    ctx->c0 = c.gen.c0;
    ctx->c_rev = kReverseFlowCost * S;

    auto sub = std::make_shared<NlpProblem>();
    sub->n = idx.n_per_t;
    sub->m = idx.m_per_t;
    sub->objective = [ctx](const VectorXd& x) { return ctx->objective(x); };
    sub->gradient = [ctx](const VectorXd& x) { return ctx->gradient(x); };
    sub->eq_cons = [ctx](const VectorXd& x) { return ctx->constraints(x); };
    sub->eq_jacobian = [ctx](const VectorXd& x) { return ctx->jacobian(x); };
    sub->lagrangian_hessian = [ctx](const VectorXd& x, const VectorXd& nu) {
      return ctx->hessian(x, nu);
    };
    sub->lo = lo_t;
    sub->hi = hi_t;
    sub->x0 = x0_t;
    for (int h = 0; h < nh; ++h)
      sub->x0[idx.off_phat + h] = std::min(hi_t[idx.off_phat + h],
                                           std::max(lo_t[idx.off_phat + h], ctx->ptgt[h]));

    NlpProblem::Block blk;
    blk.sub = sub;
    blk.var_idx.resize(idx.n_per_t);
    blk.con_idx.resize(idx.m_per_t);
    for (int i = 0; i < idx.n_per_t; ++i) blk.var_idx[i] = t * idx.n_per_t + i;
    for (int j = 0; j < idx.m_per_t; ++j) blk.con_idx[j] = t * idx.m_per_t + j;

    p.lo.segment(t * idx.n_per_t, idx.n_per_t) = sub->lo;
    p.hi.segment(t * idx.n_per_t, idx.n_per_t) = sub->hi;
    p.x0.segment(t * idx.n_per_t, idx.n_per_t) = sub->x0;
    p.partition.push_back(std::move(blk));
  }

  if (warm_x0) {
    if (warm_x0->size() != p.n) throw std::invalid_argument("warm start has wrong size");
    p.x0 = *warm_x0;
  }
  nlp::attach_partition_callbacks(p);
  return out;
}

Eigen::MatrixXd extract_network_profile(const NetworkIndex& idx, const nlp::NlpSolution& sol) {
  if (sol.status != nlp::SolveStatus::optimal)
    throw std::runtime_error("extract_network_profile: solution not optimal");
  Eigen::MatrixXd p(idx.nh, idx.nt);
  for (int t = 0; t < idx.nt; ++t)
    for (int h = 0; h < idx.nh; ++h) p(h, t) = sol.x[idx.var_phat(t, h)];
  return p;
}

Eigen::MatrixXd extract_network_profile_kw(const NetworkIndex& idx, const nlp::NlpSolution& sol,
                                           const model::BaseValues& base) {
  return extract_network_profile(idx, sol) * base.s_base_kva;
}

}  // namespace dopf::opf
