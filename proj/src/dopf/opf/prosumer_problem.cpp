#include "dopf/opf/prosumer_problem.hpp"

#include <stdexcept>
#include <vector>

namespace dopf::opf {

using Eigen::VectorXd;

ProsumerQp build_prosumer_subproblem(const model::ProsumerProfile& prof,
                                     const model::Horizon& horizon, const model::Tariff& tariff,
                                     const model::BaseValues& base, const Eigen::VectorXd& p_hat,
                                     const Eigen::VectorXd& lambda, double rho) {
  const int T = horizon.steps;
  if (p_hat.size() != T || lambda.size() != T)
    throw std::invalid_argument("consensus vectors must have length |T|");

  ProsumerQp out;
  ProsumerIndex& ix = out.idx;
  ix.nt = T;
  ix.battery = prof.battery.has_value();
  ix.w = ix.battery ? 7 : 4;

  const double S = base.s_base_kva;
  const double dt = horizon.dt_hours;
  const int n = ix.n(), m = ix.m();

  nlp::BoxQp& qp = out.qp;
  qp.g = VectorXd::Zero(n);
  qp.b = VectorXd::Zero(m);
  qp.lo = VectorXd::Zero(n);
  qp.hi = VectorXd::Zero(n);

  std::vector<Eigen::Triplet<double>> ht, at;
  const model::BatterySpec* bat = prof.battery ? &*prof.battery : nullptr;

  for (int t = 0; t < T; ++t) {
    const int vp = ix.var(t, ProsumerIndex::kNet);
    const int vi = ix.var(t, ProsumerIndex::kImp);
    const int ve = ix.var(t, ProsumerIndex::kExp);
    const int vv = ix.var(t, ProsumerIndex::kPv);

    ht.emplace_back(vp, vp, rho);
    qp.g[vp] = -(rho * p_hat[t] + lambda[t]);
    qp.g[vi] = tariff.c_tou[t] * S * dt;
    qp.g[ve] = -tariff.c_fit * S * dt;

    qp.lo[vp] = prof.p_min_kw / S;
    qp.hi[vp] = prof.p_max_kw / S;
    qp.lo[vi] = 0.0;
    qp.hi[vi] = std::max(0.0, prof.p_max_kw / S);
    qp.lo[ve] = 0.0;
    qp.hi[ve] = std::max(0.0, -prof.p_min_kw / S);
    qp.lo[vv] = 0.0;
    qp.hi[vv] = prof.pv_available_kw[t] / S;

    int row = t * ix.rows_per_t();
    // split: p_net - p_imp + p_exp = 0
    at.emplace_back(row, vp, 1.0);
    at.emplace_back(row, vi, -1.0);
    at.emplace_back(row, ve, 1.0);
    // balance: p_net + p_pv - p_ch + p_dis = demand
    at.emplace_back(row + 1, vp, 1.0);
    at.emplace_back(row + 1, vv, 1.0);
    qp.b[row + 1] = prof.demand_kw[t] / S;

    if (bat) {
      const int vc = ix.var(t, ProsumerIndex::kCh);
      const int vd = ix.var(t, ProsumerIndex::kDis);
      const int vs = ix.var(t, ProsumerIndex::kSoc);
      at.emplace_back(row + 1, vc, -1.0);
      at.emplace_back(row + 1, vd, 1.0);

      qp.lo[vc] = 0.0;
      qp.hi[vc] = bat->p_ch_max_kw / S;
      qp.lo[vd] = 0.0;
      qp.hi[vd] = bat->p_dis_max_kw / S;
      qp.lo[vs] = bat->soc_min_kwh / S;
      qp.hi[vs] = bat->soc_max_kwh / S;
      if (t == T - 1) qp.lo[vs] = std::max(bat->soc_min_kwh, bat->soc_init_kwh) / S;

      // soc_t - soc_{t-1} - dt (eta_ch p_ch - p_dis / eta_dis) = 0
      at.emplace_back(row + 2, vs, 1.0);
      at.emplace_back(row + 2, vc, -dt * bat->eta_ch);
      at.emplace_back(row + 2, vd, dt / bat->eta_dis);
      if (t > 0)
        at.emplace_back(row + 2, ix.var(t - 1, ProsumerIndex::kSoc), -1.0);
      else
        qp.b[row + 2] = bat->soc_init_kwh / S;
    }
  }

  qp.H.resize(n, n);
  qp.H.setFromTriplets(ht.begin(), ht.end());
  qp.A.resize(m, n);
  qp.A.setFromTriplets(at.begin(), at.end());
  return out;
}

ProsumerSolveResult solve_prosumer(const model::ProsumerProfile& prof,
                                   const model::Horizon& horizon, const model::Tariff& tariff,
                                   const model::BaseValues& base, const Eigen::VectorXd& p_hat,
                                   const Eigen::VectorXd& lambda, double rho) {
  ProsumerQp built = build_prosumer_subproblem(prof, horizon, tariff, base, p_hat, lambda, rho);
  ProsumerSolveResult res;
  res.idx = built.idx;
  res.sol = nlp::solve_qp_box(built.qp);

  const ProsumerIndex& ix = built.idx;
  if (ix.battery) {
    const auto& bat = *prof.battery;
    double soc = bat.soc_init_kwh / base.s_base_kva;
    for (int t = 0; t < ix.nt; ++t) {
      soc += horizon.dt_hours * (bat.eta_ch * res.sol.x[ix.var(t, ProsumerIndex::kCh)] -
                                 res.sol.x[ix.var(t, ProsumerIndex::kDis)] / bat.eta_dis);
      res.sol.x[ix.var(t, ProsumerIndex::kSoc)] = soc;
    }
  }
  res.p.resize(ix.nt);
  for (int t = 0; t < ix.nt; ++t) res.p[t] = res.sol.x[ix.var(t, ProsumerIndex::kNet)];
  return res;
}

Eigen::VectorXd extract_prosumer_profile_kw(const ProsumerIndex& idx, const nlp::NlpSolution& sol,
                                            const model::BaseValues& base) {
  if (sol.status != nlp::SolveStatus::optimal)
    throw std::runtime_error("extract_prosumer_profile_kw: solution not optimal");
  Eigen::VectorXd p(idx.nt);
  for (int t = 0; t < idx.nt; ++t)
    p[t] = sol.x[idx.var(t, ProsumerIndex::kNet)] * base.s_base_kva;
  return p;
}

double tariff_cost_kw(const Eigen::VectorXd& p_kw, const model::Horizon& horizon,
                      const model::Tariff& tariff) {
  double cost = 0.0;
  for (int t = 0; t < (int)p_kw.size(); ++t) {
    double imp = std::max(0.0, p_kw[t]);
    double exp = std::max(0.0, -p_kw[t]);
    cost += horizon.dt_hours * (tariff.c_tou[t] * imp - tariff.c_fit * exp);
  }
  return cost;
}

}  // namespace dopf::opf
