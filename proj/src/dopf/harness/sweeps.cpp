#include "dopf/harness/sweeps.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "dopf/harness/loopback.hpp"
#include "dopf/opf/centralized.hpp"

namespace dopf::harness {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

SweepRow row_from_run(const model::Case& c, const admm::AdmmResult& res) {
  SweepRow row;
  row.status = admm::to_string(res.status);
  row.k = res.iterations();
  row.gap_percent = kNan;
  if (!res.history.empty()) {
    const auto& last = res.history.back();
    row.r_norm = last.r_norm;
    row.s_norm = last.s_norm;
    row.eps_pri = last.eps_pri;
    row.eps_dual = last.eps_dual;
    row.objective = last.objective;
    double a = 0, b = 0, c9 = 0;
    for (const auto& h : res.history) {
      a += h.t_9a_ms;
      b += h.t_9b_ms;
      c9 += h.t_9c_ms;
      row.mean_t9b_solo_ms += h.t_9b_max_ms;
      row.total_bytes_up += h.bytes_up;
      row.total_bytes_down += h.bytes_down;
    }
    const double n = (double)res.history.size();
    row.mean_t9a_ms = a / n;
    row.mean_t9b_ms = b / n;
    row.mean_t9c_ms = c9 / n;
    row.mean_t9b_solo_ms /= n;
  }
  const Eigen::MatrixXd gap = (res.state.p_hat - res.state.p).cwiseAbs();
  if (gap.size() > 0) {
    const double to_w = c.base.s_base_kva * 1000.0;
    row.r_max_w = gap.maxCoeff() * to_w;
    row.r_mean_w = gap.mean() * to_w;
  }
  if (res.network_sol.status == nlp::SolveStatus::optimal && res.net_idx.nb > 0) {
    const auto f = binding_flags(c, res.net_idx, res.network_sol.x);
    row.flag_undervoltage = f.undervoltage;
    row.flag_overvoltage = f.overvoltage;
    row.flag_feeder = f.feeder;
  }
  return row;
}

bool feq(double a, double b) {
  if (std::isnan(a) && std::isnan(b)) return true;
  return a == b;
}

admm::AdmmResult run_point(const model::Case& c, const admm::AdmmConfig& cfg,
                           const SweepSpec& spec) {
  if (!spec.loopback) return admm::run_admm(c, cfg);
  return run_loopback(c, cfg).result;
}

model::Case base_case_for(const SweepSpec& spec) {
  if (spec.base_case) return *spec.base_case;
  return model::build_case(spec.template_name, spec.horizon_name, spec.seed);
}

}  // namespace

const char* to_string(SweepKind k) {
  switch (k) {
    case SweepKind::tolerance: return "tolerance";
    case SweepKind::mix: return "mix";
    case SweepKind::size: return "size";
  }
  return "?";
}

SweepKind sweep_kind_from(const std::string& s) {
  if (s == "tolerance") return SweepKind::tolerance;
  if (s == "mix") return SweepKind::mix;
  if (s == "size") return SweepKind::size;
  throw std::invalid_argument("unknown sweep kind '" + s + "'");
}

std::vector<std::pair<double, double>> default_mix_grid() {
  std::vector<std::pair<double, double>> g;
  for (double d : {0.5, 1.0, 1.5, 2.0, 2.5, 3.0})
    for (double pv : {0.0, 0.5, 1.0, 1.5, 2.0}) g.emplace_back(d, pv);
  return g;
}

bool rows_equal(const SweepRow& a, const SweepRow& b) {
  return a.label == b.label && feq(a.eps_abs, b.eps_abs) && feq(a.alpha_d, b.alpha_d) &&
         feq(a.alpha_pv, b.alpha_pv) && a.size == b.size && a.status == b.status && a.k == b.k &&
         feq(a.r_norm, b.r_norm) && feq(a.s_norm, b.s_norm) && feq(a.eps_pri, b.eps_pri) &&
         feq(a.eps_dual, b.eps_dual) && feq(a.objective, b.objective) &&
         feq(a.gap_percent, b.gap_percent) && feq(a.r_max_w, b.r_max_w) &&
         feq(a.r_mean_w, b.r_mean_w) && feq(a.mean_t9a_ms, b.mean_t9a_ms) &&
         feq(a.mean_t9b_ms, b.mean_t9b_ms) && feq(a.mean_t9c_ms, b.mean_t9c_ms) &&
         feq(a.mean_t9b_solo_ms, b.mean_t9b_solo_ms) && a.total_bytes_up == b.total_bytes_up &&
         a.total_bytes_down == b.total_bytes_down &&
         a.flag_undervoltage == b.flag_undervoltage && a.flag_overvoltage == b.flag_overvoltage &&
         a.flag_feeder == b.flag_feeder;
}

double centralized_objective(const model::Case& c, std::string* note) {
  const auto sz = model::problem_size(c);
  if (sz.n_vars > kCentralizedVarLimit) {
    if (note)
      *note = "centralized oracle skipped: " + std::to_string(sz.n_vars) +
              " variables exceed the dense-KKT limit of " + std::to_string(kCentralizedVarLimit);
    return kNan;
  }
  auto cp = opf::build_centralized(c);
  nlp::SolveOptions opts;
  opts.tol = 1e-8;
  opts.max_iter = 300;
  auto sol = nlp::solve(cp.nlp, opts);
  if (sol.status != nlp::SolveStatus::optimal) {
    if (note) *note = "centralized solve failed: " + sol.message;
    return kNan;
  }
  return sol.objective;
}

ConstraintFlags binding_flags(const model::Case& c, const opf::NetworkIndex& idx,
                              const Eigen::VectorXd& x, double tol) {
  ConstraintFlags f;
  std::vector<const model::Bus*> non_slack;
  for (const auto& b : c.buses)
    if (!b.is_slack) non_slack.push_back(&b);
  const double pgp_hi = std::max(0.0, model::to_per_unit(c.gen.p_max_kw, c.base));
  const double pgm_hi = std::max(0.0, model::to_per_unit(-c.gen.p_min_kw, c.base));
  for (int t = 0; t < idx.nt; ++t) {
    for (int k = 0; k < (int)non_slack.size(); ++k) {
      const double v = x[idx.var_v(t, k)];
      if (v <= non_slack[k]->v_min + tol) f.undervoltage = true;
      if (v >= non_slack[k]->v_max - tol) f.overvoltage = true;
    }
    if (pgp_hi > 0.0 && x[idx.var_pgp(t)] >= pgp_hi - tol) f.feeder = true;
    if (pgm_hi > 0.0 && x[idx.var_pgm(t)] >= pgm_hi - tol) f.feeder = true;
  }
  return f;
}

SweepResult run_tolerance_sweep(const SweepSpec& spec) {
  if (spec.tolerances.empty()) throw std::invalid_argument("tolerance sweep: empty grid");
  for (std::size_t i = 0; i < spec.tolerances.size(); ++i) {
    if (spec.tolerances[i] <= 0.0)
      throw std::invalid_argument("tolerance sweep: tolerances must be positive");
    if (i > 0 && spec.tolerances[i] >= spec.tolerances[i - 1])
      throw std::invalid_argument("tolerance sweep: grid must be sorted descending");
  }
  SweepResult out;
  out.kind = SweepKind::tolerance;
  out.t9a_slope_ms_per_prosumer = kNan;
  const model::Case c = base_case_for(spec);

  out.centralized_objective = kNan;
  if (spec.centralized_oracle) {
    std::string note;
    out.centralized_objective = centralized_objective(c, &note);
    if (!note.empty()) out.notes.push_back(note);
  }

  for (double eps : spec.tolerances) {
    admm::AdmmConfig cfg = spec.admm;
    cfg.eps_abs = eps;
    cfg.eps_rel = 0.0;
    auto res = run_point(c, cfg, spec);
    SweepRow row = row_from_run(c, res);
    row.label = "eps-" + fmt("%.0e", eps);
    row.eps_abs = eps;
    if (!std::isnan(out.centralized_objective))
      row.gap_percent = 100.0 * (row.objective - out.centralized_objective) /
                        std::abs(out.centralized_objective);
    if (res.status != admm::RunStatus::converged) {
      out.any_failed = true;
      out.notes.push_back(row.label + ": " + res.message);
    }
    out.rows.push_back(std::move(row));
    out.histories.push_back(res.history);
  }
  return out;
}

SweepResult run_mix_sweep(const SweepSpec& spec) {
  SweepResult out;
  out.kind = SweepKind::mix;
  out.centralized_objective = kNan;
  out.t9a_slope_ms_per_prosumer = kNan;
  const auto grid = spec.mix_grid.empty() ? default_mix_grid() : spec.mix_grid;
  const model::Case base = base_case_for(spec);

  for (const auto& [ad, apv] : grid) {
    SweepRow row;
    row.label = "d" + fmt("%.2f", ad) + "-pv" + fmt("%.2f", apv);
    row.alpha_d = ad;
    row.alpha_pv = apv;
    row.gap_percent = kNan;
    try {
      const model::Case c = model::scale_mix(base, ad, apv);
      auto res = run_point(c, spec.admm, spec);
      const std::string label = row.label;
      row = row_from_run(c, res);
      row.label = label;
      row.alpha_d = ad;
      row.alpha_pv = apv;
      if (res.status != admm::RunStatus::converged) {
        out.any_failed = true;
        out.notes.push_back(row.label + ": " + res.message);
      }
      out.histories.push_back(res.history);
    } catch (const std::exception& e) {
      row.status = "error";
      out.any_failed = true;
      out.notes.push_back(row.label + ": " + e.what());
      out.histories.emplace_back();
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

SweepResult run_size_sweep(const SweepSpec& spec) {
  if (spec.sizes.empty()) throw std::invalid_argument("size sweep: empty grid");
  SweepResult out;
  out.kind = SweepKind::size;
  out.centralized_objective = kNan;

  for (int n : spec.sizes) {
    SweepRow row;
    row.label = "n-" + std::to_string(n);
    row.size = n;
    row.gap_percent = kNan;
    try {
      const model::Case c =
          model::build_case("minimal-" + std::to_string(n), spec.horizon_name, spec.seed);
      auto res = run_point(c, spec.admm, spec);
      const std::string label = row.label;
      row = row_from_run(c, res);
      row.label = label;
      row.size = n;
      if (res.status != admm::RunStatus::converged) {
        out.any_failed = true;
        out.notes.push_back(row.label + ": " + res.message);
      }
      out.histories.push_back(res.history);
    } catch (const std::exception& e) {
      row.status = "error";
      out.any_failed = true;
      out.notes.push_back(row.label + ": " + e.what());
      out.histories.emplace_back();
    }
    out.rows.push_back(std::move(row));
  }

  // least-squares slope of mean t_9a against prosumer count
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (const auto& r : out.rows) {
    if (r.status != "converged" && r.status != "max_iter") continue;
    sx += r.size;
    sy += r.mean_t9a_ms;
    sxx += (double)r.size * r.size;
    sxy += r.size * r.mean_t9a_ms;
    ++m;
  }
  const double den = m * sxx - sx * sx;
  out.t9a_slope_ms_per_prosumer = (m >= 2 && den != 0.0) ? (m * sxy - sx * sy) / den : kNan;
  return out;
}

SweepResult run_sweep(const SweepSpec& spec) {
  switch (spec.kind) {
    case SweepKind::tolerance: return run_tolerance_sweep(spec);
    case SweepKind::mix: return run_mix_sweep(spec);
    case SweepKind::size: return run_size_sweep(spec);
  }
  throw std::invalid_argument("unknown sweep kind");
}

}  // namespace dopf::harness
