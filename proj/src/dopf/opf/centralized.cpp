#include "dopf/opf/centralized.hpp"

#include <cmath>
#include <memory>

#include "dopf/opf/grid.hpp"
#include "dopf/opf/network_problem.hpp"

namespace dopf::opf {

using nlp::NlpProblem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct CentralCtx {
  std::shared_ptr<const Grid> grid;
  CentralIndex ix;
  double S = 0.0, dt = 0.0;
  double c2 = 0.0, c1 = 0.0, c0 = 0.0, c_rev = 0.0;
  std::vector<int> pro_bus;                 // prosumer -> bus position
  std::vector<VectorXd> q_fixed;            // per t, length nb
  MatrixXd demand_pu;                       // nh x nt
  std::vector<double> ctou_coef;            // $ per unit of p_imp, per t
  double cfit_coef = 0.0;
  std::vector<const model::BatterySpec*> bat;

  void unpack(const VectorXd& x, int t, VectorXd& v, VectorXd& th) const {
    const Grid& g = *grid;
    v = VectorXd::Ones(g.nb);
    th = VectorXd::Zero(g.nb);
    for (int k = 0; k < (int)g.non_slack.size(); ++k) {
      v[g.non_slack[k]] = x[ix.var_v(t, k)];
      th[g.non_slack[k]] = x[ix.var_th(t, k)];
    }
  }

  double objective(const VectorXd& x) const {
    double s = 0.0;
    for (int t = 0; t < ix.nt; ++t) {
      double pgp = x[ix.var_pgp(t)];
      s += c2 * pgp * pgp + c1 * pgp + c0 + c_rev * x[ix.var_pgm(t)];
      for (int h = 0; h < ix.nh; ++h)
        s += ctou_coef[t] * x[ix.var_pro(h, t, ProsumerIndex::kImp)] -
             cfit_coef * x[ix.var_pro(h, t, ProsumerIndex::kExp)];
    }
    return s;
  }

  VectorXd gradient(const VectorXd& x) const {
    VectorXd g = VectorXd::Zero(ix.n);
    for (int t = 0; t < ix.nt; ++t) {
      g[ix.var_pgp(t)] = 2.0 * c2 * x[ix.var_pgp(t)] + c1;
      g[ix.var_pgm(t)] = c_rev;
      for (int h = 0; h < ix.nh; ++h) {
        g[ix.var_pro(h, t, ProsumerIndex::kImp)] = ctou_coef[t];
        g[ix.var_pro(h, t, ProsumerIndex::kExp)] = -cfit_coef;
      }
    }
    return g;
  }

  VectorXd constraints(const VectorXd& x) const {
    const Grid& g = *grid;
    VectorXd c = VectorXd::Zero(ix.m);
    for (int t = 0; t < ix.nt; ++t) {
      VectorXd v, th, p, q;
      unpack(x, t, v, th);
      g.injections(v, th, p, q);
      for (int i = 0; i < g.nb; ++i) {
        double spec_p = 0.0, spec_q = -q_fixed[t][i];
        if (i == g.slack) {
          spec_p = x[ix.var_pgp(t)] - x[ix.var_pgm(t)];
          spec_q = x[ix.var_qg(t)];
        }
        c[t * 2 * g.nb + i] = p[i] - spec_p;
        c[t * 2 * g.nb + g.nb + i] = q[i] - spec_q;
      }
      for (int h = 0; h < ix.nh; ++h)
        c[t * 2 * g.nb + pro_bus[h]] += x[ix.var_pro(h, t, ProsumerIndex::kNet)];
    }
    for (int h = 0; h < ix.nh; ++h) {
      const ProsumerIndex& pi = ix.pro[h];
      for (int t = 0; t < ix.nt; ++t) {
        int row = ix.pro_con_base[h] + t * pi.rows_per_t();
        double pn = x[ix.var_pro(h, t, ProsumerIndex::kNet)];
        c[row] = pn - x[ix.var_pro(h, t, ProsumerIndex::kImp)] +
                 x[ix.var_pro(h, t, ProsumerIndex::kExp)];
        c[row + 1] = pn + x[ix.var_pro(h, t, ProsumerIndex::kPv)] - demand_pu(h, t);
        if (pi.battery) {
          double ch = x[ix.var_pro(h, t, ProsumerIndex::kCh)];
          double dis = x[ix.var_pro(h, t, ProsumerIndex::kDis)];
          c[row + 1] += -ch + dis;
          double soc_prev = t > 0 ? x[ix.var_pro(h, t - 1, ProsumerIndex::kSoc)]
                                  : bat[h]->soc_init_kwh / S;
          c[row + 2] = x[ix.var_pro(h, t, ProsumerIndex::kSoc)] - soc_prev -
                       dt * (bat[h]->eta_ch * ch - dis / bat[h]->eta_dis);
        }
      }
    }
    return c;
  }

  MatrixXd jacobian(const VectorXd& x) const {
    const Grid& g = *grid;
    MatrixXd J = MatrixXd::Zero(ix.m, ix.n);
    for (int t = 0; t < ix.nt; ++t) {
      VectorXd v, th;
      unpack(x, t, v, th);
      MatrixXd dpv, dpt, dqv, dqt;
      g.jacobians(v, th, dpv, dpt, dqv, dqt);
      const int rp = t * 2 * g.nb, rq = rp + g.nb;
      for (int i = 0; i < g.nb; ++i) {
        for (int k = 0; k < (int)g.non_slack.size(); ++k) {
          int b = g.non_slack[k];
          J(rp + i, ix.var_v(t, k)) = dpv(i, b);
          J(rp + i, ix.var_th(t, k)) = dpt(i, b);
          J(rq + i, ix.var_v(t, k)) = dqv(i, b);
          J(rq + i, ix.var_th(t, k)) = dqt(i, b);
        }
      }
      J(rp + g.slack, ix.var_pgp(t)) = -1.0;
      J(rp + g.slack, ix.var_pgm(t)) = 1.0;
      J(rq + g.slack, ix.var_qg(t)) = -1.0;
      for (int h = 0; h < ix.nh; ++h)
        J(rp + pro_bus[h], ix.var_pro(h, t, ProsumerIndex::kNet)) = 1.0;
    }
    for (int h = 0; h < ix.nh; ++h) {
      const ProsumerIndex& pi = ix.pro[h];
      for (int t = 0; t < ix.nt; ++t) {
        int row = ix.pro_con_base[h] + t * pi.rows_per_t();
        J(row, ix.var_pro(h, t, ProsumerIndex::kNet)) = 1.0;
        J(row, ix.var_pro(h, t, ProsumerIndex::kImp)) = -1.0;
        J(row, ix.var_pro(h, t, ProsumerIndex::kExp)) = 1.0;
        J(row + 1, ix.var_pro(h, t, ProsumerIndex::kNet)) = 1.0;
        J(row + 1, ix.var_pro(h, t, ProsumerIndex::kPv)) = 1.0;
        if (pi.battery) {
          J(row + 1, ix.var_pro(h, t, ProsumerIndex::kCh)) = -1.0;
          J(row + 1, ix.var_pro(h, t, ProsumerIndex::kDis)) = 1.0;
          J(row + 2, ix.var_pro(h, t, ProsumerIndex::kSoc)) = 1.0;
          J(row + 2, ix.var_pro(h, t, ProsumerIndex::kCh)) = -dt * bat[h]->eta_ch;
          J(row + 2, ix.var_pro(h, t, ProsumerIndex::kDis)) = dt / bat[h]->eta_dis;
          if (t > 0) J(row + 2, ix.var_pro(h, t - 1, ProsumerIndex::kSoc)) = -1.0;
        }
      }
    }
    return J;
  }

  MatrixXd hessian(const VectorXd& x, const VectorXd& nu) const {
    const Grid& g = *grid;
    MatrixXd W = MatrixXd::Zero(ix.n, ix.n);
    const int K = (int)g.non_slack.size();
    for (int t = 0; t < ix.nt; ++t) {
      VectorXd v, th;
      unpack(x, t, v, th);
      VectorXd nup = nu.segment(t * 2 * g.nb, g.nb);
      VectorXd nuq = nu.segment(t * 2 * g.nb + g.nb, g.nb);
      MatrixXd Hvt = g.weighted_hessian(v, th, nup, nuq);
      for (int a = 0; a < K; ++a) {
        int ba = g.non_slack[a];
        for (int b = 0; b < K; ++b) {
          int bb = g.non_slack[b];
          W(ix.var_v(t, a), ix.var_v(t, b)) = Hvt(ba, bb);
          W(ix.var_v(t, a), ix.var_th(t, b)) = Hvt(ba, g.nb + bb);
          W(ix.var_th(t, a), ix.var_v(t, b)) = Hvt(g.nb + ba, bb);
          W(ix.var_th(t, a), ix.var_th(t, b)) = Hvt(g.nb + ba, g.nb + bb);
        }
      }
      W(ix.var_pgp(t), ix.var_pgp(t)) += 2.0 * c2;
    }
    return W;
  }
};

}  // namespace

CentralProblem build_centralized(const model::Case& c) {
  const int nh = (int)c.prosumers.size();
  const int nt = c.horizon.steps;

  auto grid = std::make_shared<Grid>(Grid::from_case(c));
  const int nb = grid->nb;
  const double S = c.base.s_base_kva;

  CentralProblem out;
  CentralIndex& ix = out.idx;
  ix.nb = nb;
  ix.nh = nh;
  ix.nt = nt;
  ix.off_th = nb - 1;
  ix.off_pgp = 2 * (nb - 1);
  ix.off_pgm = ix.off_pgp + 1;
  ix.off_qg = ix.off_pgp + 2;
  ix.w_net = ix.off_qg + 1;

  int nv = nt * ix.w_net;
  int nc = nt * 2 * nb;
  for (int h = 0; h < nh; ++h) {
    ProsumerIndex pi;
    pi.nt = nt;
    pi.battery = c.prosumers[h].battery.has_value();
    pi.w = pi.battery ? 7 : 4;
    ix.pro.push_back(pi);
    ix.pro_var_base.push_back(nv);
    ix.pro_con_base.push_back(nc);
    nv += pi.n();
    nc += pi.m();
  }
  ix.n = nv;
  ix.m = nc;

  auto ctx = std::make_shared<CentralCtx>();
  ctx->grid = grid;
  ctx->ix = ix;
  ctx->S = S;
  ctx->dt = c.horizon.dt_hours;
  ctx->c2 = c.gen.c2 * S * S;
  ctx->c1 = c.gen.c1 * S;
  ctx->c0 = c.gen.c0;
  ctx->c_rev = kReverseFlowCost * S;
  ctx->cfit_coef = c.tariff.c_fit * S * c.horizon.dt_hours;
  ctx->demand_pu.resize(nh, nt);
  for (int t = 0; t < nt; ++t) {
    ctx->ctou_coef.push_back(c.tariff.c_tou[t] * S * c.horizon.dt_hours);
    VectorXd qf = VectorXd::Zero(nb);
    for (int h = 0; h < nh; ++h)
      qf[grid->pos_of_id.at(c.prosumers[h].bus_id)] += c.prosumers[h].q_demand_kvar[t] / S;
    ctx->q_fixed.push_back(qf);
  }
  for (int h = 0; h < nh; ++h) {
    ctx->pro_bus.push_back(grid->pos_of_id.at(c.prosumers[h].bus_id));
    ctx->bat.push_back(c.prosumers[h].battery ? &*c.prosumers[h].battery : nullptr);
    for (int t = 0; t < nt; ++t) ctx->demand_pu(h, t) = c.prosumers[h].demand_kw[t] / S;
  }

  NlpProblem& p = out.nlp;
  p.n = ix.n;
  p.m = ix.m;
  p.objective = [ctx](const VectorXd& x) { return ctx->objective(x); };
  p.gradient = [ctx](const VectorXd& x) { return ctx->gradient(x); };
  p.eq_cons = [ctx](const VectorXd& x) { return ctx->constraints(x); };
  p.eq_jacobian = [ctx](const VectorXd& x) { return ctx->jacobian(x); };
  p.lagrangian_hessian = [ctx](const VectorXd& x, const VectorXd& nu) {
    return ctx->hessian(x, nu);
  };

  p.lo = VectorXd::Constant(ix.n, -kInf);
  p.hi = VectorXd::Constant(ix.n, kInf);
  p.x0 = VectorXd::Zero(ix.n);
  for (int t = 0; t < nt; ++t) {
    for (int k = 0; k < nb - 1; ++k) {
      const auto& bus = c.buses[grid->non_slack[k]];
      p.lo[ix.var_v(t, k)] = bus.v_min;
      p.hi[ix.var_v(t, k)] = bus.v_max;
      p.x0[ix.var_v(t, k)] = 1.0;
    }
    p.lo[ix.var_pgp(t)] = 0.0;
    p.hi[ix.var_pgp(t)] = std::max(0.0, c.gen.p_max_kw / S);
    p.lo[ix.var_pgm(t)] = 0.0;
    p.hi[ix.var_pgm(t)] = std::max(0.0, -c.gen.p_min_kw / S);
    p.lo[ix.var_qg(t)] = c.gen.q_min_kvar / S;
    p.hi[ix.var_qg(t)] = c.gen.q_max_kvar / S;
  }
  for (int h = 0; h < nh; ++h) {
    const auto& prof = c.prosumers[h];
    const auto* bat = ctx->bat[h];
    for (int t = 0; t < nt; ++t) {
      int vp = ix.var_pro(h, t, ProsumerIndex::kNet);
      int vi = ix.var_pro(h, t, ProsumerIndex::kImp);
      int ve = ix.var_pro(h, t, ProsumerIndex::kExp);
      int vv = ix.var_pro(h, t, ProsumerIndex::kPv);
      p.lo[vp] = prof.p_min_kw / S;
      p.hi[vp] = prof.p_max_kw / S;
      p.lo[vi] = 0.0;
      p.hi[vi] = std::max(0.0, prof.p_max_kw / S);
      p.lo[ve] = 0.0;
      p.hi[ve] = std::max(0.0, -prof.p_min_kw / S);
      p.lo[vv] = 0.0;
      p.hi[vv] = prof.pv_available_kw[t] / S;
      double d = ctx->demand_pu(h, t);
      p.x0[vp] = std::min(p.hi[vp], std::max(p.lo[vp], d));
      p.x0[vi] = std::max(0.0, p.x0[vp]);
      p.x0[ve] = std::max(0.0, -p.x0[vp]);
      p.x0[vv] = 0.5 * p.hi[vv];
      if (bat) {
        int vc = ix.var_pro(h, t, ProsumerIndex::kCh);
        int vd = ix.var_pro(h, t, ProsumerIndex::kDis);
        int vs = ix.var_pro(h, t, ProsumerIndex::kSoc);
        p.lo[vc] = 0.0;
        p.hi[vc] = bat->p_ch_max_kw / S;
        p.lo[vd] = 0.0;
        p.hi[vd] = bat->p_dis_max_kw / S;
        p.lo[vs] = bat->soc_min_kwh / S;
        p.hi[vs] = bat->soc_max_kwh / S;
        if (t == nt - 1) p.lo[vs] = std::max(bat->soc_min_kwh, bat->soc_init_kwh) / S;
        p.x0[vs] = bat->soc_init_kwh / S;
      }
    }
  }
  return out;
}

}  // namespace dopf::opf
