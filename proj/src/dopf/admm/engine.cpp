#include "dopf/admm/engine.hpp"

#include <algorithm>
#include <chrono>
#include <mutex>
#include <thread>
#include <vector>

#include "dopf/admm/ops.hpp"
#include "dopf/opf/network_problem.hpp"
#include "dopf/opf/prosumer_problem.hpp"

namespace dopf::admm {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

Eigen::MatrixXd demand_matrix_pu(const model::Case& c) {
  const int nh = (int)c.prosumers.size();
  const int nt = c.horizon.steps;
  Eigen::MatrixXd d(nh, nt);
  for (int h = 0; h < nh; ++h)
    for (int t = 0; t < nt; ++t)
      d(h, t) = model::to_per_unit(c.prosumers[h].demand_kw[t], c.base);
  return d;
}

double generation_cost(const model::Case& c, const opf::NetworkIndex& idx,
                       const Eigen::VectorXd& x) {
  double cost = 0.0;
  for (int t = 0; t < idx.nt; ++t) {
    const double pg_kw = model::from_per_unit(x[idx.var_pgp(t)], c.base);
    cost += c.gen.c2 * pg_kw * pg_kw + c.gen.c1 * pg_kw + c.gen.c0;
  }
  return cost;
}

double fleet_tariff_cost(const model::Case& c, const Eigen::MatrixXd& p_pu) {
  double cost = 0.0;
  for (int h = 0; h < p_pu.rows(); ++h) {
    Eigen::VectorXd p_kw = p_pu.row(h).transpose() * c.base.s_base_kva;
    cost += opf::tariff_cost_kw(p_kw, c.horizon, c.tariff);
  }
  return cost;
}

}  // namespace

const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::converged: return "converged";
    case RunStatus::max_iter: return "max_iter";
    case RunStatus::transport_failure: return "transport_failure";
    case RunStatus::solver_error: return "solver_error";
  }
  return "unknown";
}

InProcessBackend::InProcessBackend(const model::Case& c, int workers)
    : case_(c), workers_(std::max(1, workers)) {}

ProsumerBackend::RoundResult InProcessBackend::solve_round(int, const Eigen::MatrixXd& p_hat,
                                                           const Eigen::MatrixXd& lambda,
                                                           double rho) {
  const int nh = (int)case_.prosumers.size();
  RoundResult out;
  out.p.resize(nh, case_.horizon.steps);

  std::mutex mtx;
  auto work = [&](int h0, int stride) {
    double local_max = 0.0;
    for (int h = h0; h < nh; h += stride) {
      const auto t0 = Clock::now();
      auto r = opf::solve_prosumer(case_.prosumers[h], case_.horizon, case_.tariff, case_.base,
                                   p_hat.row(h).transpose(), lambda.row(h).transpose(), rho);
      local_max = std::max(local_max, ms_since(t0));
      if (r.sol.status != nlp::SolveStatus::optimal) {
        std::lock_guard<std::mutex> lk(mtx);
        out.ok = false;
        out.failed_agent = case_.prosumers[h].id;
        out.error = "prosumer " + std::to_string(case_.prosumers[h].id) +
                    " subproblem failed: " + r.sol.message;
        return;
      }
      std::lock_guard<std::mutex> lk(mtx);
      out.p.row(h) = r.p.transpose();
    }
    std::lock_guard<std::mutex> lk(mtx);
    out.max_solve_ms = std::max(out.max_solve_ms, local_max);
  };

  const int nw = std::min(workers_, std::max(1, nh));
  if (nw <= 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nw);
    for (int w = 0; w < nw; ++w) pool.emplace_back(work, w, nw);
    for (auto& th : pool) th.join();
  }
  return out;
}

AdmmResult run_admm(const model::Case& c, const AdmmConfig& cfg, ProsumerBackend& backend) {
  model::validate(c);
  const int nh = (int)c.prosumers.size();
  const int nt = c.horizon.steps;
  const int n_coupling = nh * nt;
  const double eps_rel = cfg.eps_rel_effective();

  AdmmResult res;
  CouplingState& st = res.state;
  st.p = quantize_f32(demand_matrix_pu(c));
  st.p_hat = Eigen::MatrixXd::Zero(nh, nt);
  st.lambda = Eigen::MatrixXd::Zero(nh, nt);
  st.rho = quantize_f32(cfg.rho0);
  res.status = RunStatus::max_iter;

  Eigen::VectorXd warm;
  bool have_warm = false;

  for (int k = 1; k <= cfg.k_max; ++k) {
    IterationRecord rec;
    rec.k = k;
    rec.rho = st.rho;

    auto t0 = Clock::now();
    auto np = opf::build_network_subproblem(c, st.p, st.lambda, st.rho,
                                            have_warm ? &warm : nullptr);
    auto sol = nlp::solve(np.nlp, cfg.nlp);
    rec.t_9a_ms = ms_since(t0);
    if (sol.status != nlp::SolveStatus::optimal) {
      res.status = RunStatus::solver_error;
      res.message = "network subproblem failed at k=" + std::to_string(k) + ": " + sol.message;
      backend.finish(false);
      return res;
    }
    warm = sol.x;
    have_warm = true;
    res.network_sol = sol;
    res.net_idx = np.idx;
    st.p_hat = quantize_f32(opf::extract_network_profile(np.idx, sol));

    t0 = Clock::now();
    auto round = backend.solve_round(k, st.p_hat, st.lambda, st.rho);
    rec.t_9b_ms = ms_since(t0);
    rec.t_9b_max_ms = round.max_solve_ms;
    rec.bytes_up = round.bytes_up;
    rec.bytes_down = round.bytes_down;
    if (!round.ok) {
      res.status = round.transport_fault ? RunStatus::transport_failure : RunStatus::solver_error;
      res.failed_agent = round.failed_agent;
      res.message = round.error.empty()
                        ? ("prosumer round failed at k=" + std::to_string(k))
                        : round.error;
      backend.finish(false);
      return res;
    }

    const Eigen::MatrixXd p_prev = st.p;
    t0 = Clock::now();
    st.p = quantize_f32(round.p);
    st.lambda = quantize_f32(dual_update(st));
    const Residuals r = residuals(st, p_prev);
    const Tolerances tol = tolerances(st, n_coupling, cfg.eps_abs, eps_rel);
    const bool done = check_termination(r, tol);
    if (!done) st.rho = quantize_f32(adapt_rho(st.rho, r, cfg.mu, cfg.tau_incr, cfg.tau_decr));
    rec.t_9c_ms = ms_since(t0);

    rec.r_norm = r.r_norm;
    rec.s_norm = r.s_norm;
    rec.eps_pri = tol.eps_pri;
    rec.eps_dual = tol.eps_dual;
    rec.objective = generation_cost(c, np.idx, sol.x) + fleet_tariff_cost(c, st.p);
    res.history.push_back(rec);

    if (done) {
      res.status = RunStatus::converged;
      break;
    }
  }

  res.p_kw = st.p * c.base.s_base_kva;
  res.p_hat_kw = st.p_hat * c.base.s_base_kva;
  res.objective = res.history.empty() ? 0.0 : res.history.back().objective;
  if (res.status == RunStatus::max_iter)
    res.message = "iteration limit reached (k_max=" + std::to_string(cfg.k_max) + ")";
  backend.finish(true);
  return res;
}

AdmmResult run_admm(const model::Case& c, const AdmmConfig& cfg) {
  InProcessBackend backend(c, cfg.workers);
  return run_admm(c, cfg, backend);
}

}  // namespace dopf::admm
