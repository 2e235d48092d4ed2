#pragma once

#include <Eigen/Dense>

#include "dopf/model/case.hpp"
#include "dopf/nlp/problem.hpp"

namespace dopf::opf {

/// Per-timestep variable slice of a prosumer QP:
/// [p_net, p_imp, p_exp, p_pv] and, with a battery, [p_ch, p_dis, soc].
struct ProsumerIndex {
  int nt = 0;
  bool battery = false;
  int w = 4;
  static constexpr int kNet = 0, kImp = 1, kExp = 2, kPv = 3, kCh = 4, kDis = 5, kSoc = 6;

  int var(int t, int what) const { return t * w + what; }
  int n() const { return nt * w; }
  int rows_per_t() const { return battery ? 3 : 2; }  // split, balance, soc
  int m() const { return nt * rows_per_t(); }
};

struct ProsumerQp {
  nlp::BoxQp qp;
  ProsumerIndex idx;
};

/// Eq-(9b)-style household QP in per-unit: tariff cost on the import/export
/// split plus the consensus penalty on net power. p_hat and lambda are
/// length |T|, per-unit.
ProsumerQp build_prosumer_subproblem(const model::ProsumerProfile& prof,
                                     const model::Horizon& horizon, const model::Tariff& tariff,
                                     const model::BaseValues& base, const Eigen::VectorXd& p_hat,
                                     const Eigen::VectorXd& lambda, double rho);

struct ProsumerSolveResult {
  Eigen::VectorXd p;  // net power per timestep, per-unit
  nlp::NlpSolution sol;
  ProsumerIndex idx;
};

/// Build + solve + rebuild the SoC trajectory exactly from the charge and
/// discharge flows (the QP meets the recursion only to solver tolerance;
/// the rebuild makes the telescoped identity hold to machine precision).
ProsumerSolveResult solve_prosumer(const model::ProsumerProfile& prof,
                                   const model::Horizon& horizon, const model::Tariff& tariff,
                                   const model::BaseValues& base, const Eigen::VectorXd& p_hat,
                                   const Eigen::VectorXd& lambda, double rho);

/// Prosumer-side net power profile in kW; refuses non-optimal solutions.
Eigen::VectorXd extract_prosumer_profile_kw(const ProsumerIndex& idx, const nlp::NlpSolution& sol,
                                            const model::BaseValues& base);

/// Day cost in $ of a net-power profile (kW) under the tariff: imports pay
/// c_tou, exports earn c_fit, both per kWh.
double tariff_cost_kw(const Eigen::VectorXd& p_kw, const model::Horizon& horizon,
                      const model::Tariff& tariff);

}  // namespace dopf::opf
