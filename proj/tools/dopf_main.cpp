#include <cstdio>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dopf/admm/engine.hpp"
#include "dopf/admm/history_csv.hpp"
#include "dopf/harness/report.hpp"
#include "dopf/harness/sweeps.hpp"
#include "dopf/model/case_json.hpp"
#include "dopf/net/agent.hpp"
#include "dopf/net/aggregator.hpp"

namespace {

struct LinkFlags {
  double latency_ms = 0.0;
  double latency_hi_ms = -1.0;
  double loss = 0.0;
  std::uint64_t seed = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--latency-ms", latency_ms, "injected one-way latency (fixed, or range low)");
    cmd->add_option("--latency-hi-ms", latency_hi_ms,
                    "upper end of a uniform latency range (default: fixed)");
    cmd->add_option("--loss", loss, "iid frame loss probability in [0,1)");
    cmd->add_option("--link-seed", seed, "seed for the injected impairments");
  }

  dopf::net::LinkModel model() const {
    dopf::net::LinkModel m;
    m.latency_lo_ms = latency_ms;
    m.latency_hi_ms = latency_hi_ms < 0.0 ? latency_ms : latency_hi_ms;
    m.loss = loss;
    m.seed = seed;
    return m;
  }
};

void attach_admm_flags(CLI::App* cmd, dopf::admm::AdmmConfig& cfg) {
  cmd->add_option("--eps-abs", cfg.eps_abs, "absolute tolerance eps_abs");
  cmd->add_option("--eps-rel", cfg.eps_rel, "relative tolerance (default 10 x eps_abs)");
  cmd->add_option("--rho0", cfg.rho0, "initial penalty rho");
  cmd->add_option("--k-max", cfg.k_max, "iteration cap");
  cmd->add_option("--workers", cfg.workers, "in-process prosumer solve threads");
}

int cmd_case_build(const std::string& tmpl, const std::string& horizon, std::uint64_t seed,
                   double alpha_d, double alpha_pv, const std::string& out) {
  dopf::model::Case c = dopf::model::build_case(tmpl, horizon, seed);
  if (alpha_d != 1.0 || alpha_pv != 1.0) c = dopf::model::scale_mix(c, alpha_d, alpha_pv);
  dopf::model::save_case(c, out);
  const auto sz = dopf::model::problem_size(c);
  std::printf("wrote %s: %zu buses, %zu prosumers, |T|=%d (%ld vars, %ld constraints)\n",
              out.c_str(), c.buses.size(), c.prosumers.size(), c.horizon.steps, sz.n_vars,
              sz.n_cons);
  return 0;
}

int cmd_aggregator(const std::string& case_path, const std::string& bind,
                   dopf::admm::AdmmConfig admm_cfg, const LinkFlags& link,
                   const std::string& history_path) {
  const auto c = dopf::model::load_case(case_path);
  dopf::net::AggregatorConfig cfg;
  cfg.bind = dopf::net::parse_endpoint(bind);
  cfg.link = link.model();
  dopf::net::apply_env_overrides(cfg);

  dopf::net::RemoteBackend backend(c, cfg);
  std::printf("aggregator listening on %s, run %016llx, waiting for %zu agents\n",
              backend.local().to_string().c_str(), (unsigned long long)backend.run_id(),
              c.prosumers.size());
  backend.register_agents();
  std::printf("all agents registered, starting\n");

  const auto res = dopf::admm::run_admm(c, admm_cfg, backend);
  if (!history_path.empty()) dopf::admm::write_history_csv(history_path, res.history);
  std::printf("status=%s k=%d objective=%.6f %s\n", dopf::admm::to_string(res.status),
              res.iterations(), res.objective, res.message.c_str());
  switch (res.status) {
    case dopf::admm::RunStatus::converged: return 0;
    case dopf::admm::RunStatus::max_iter: return 2;
    case dopf::admm::RunStatus::transport_failure: return 3;
    case dopf::admm::RunStatus::solver_error: return 4;
  }
  return 1;
}

int cmd_agent(const std::string& case_path, const std::string& server, int prosumer_id,
              const LinkFlags& link) {
  const auto c = dopf::model::load_case(case_path);
  dopf::net::AgentConfig cfg;
  cfg.server = dopf::net::parse_endpoint(server);
  cfg.prosumer_id = prosumer_id;
  cfg.link = link.model();
  dopf::net::apply_env_overrides(cfg);
  const auto out = dopf::net::run_agent(c, cfg);
  std::printf("agent %d: %s (%d rounds)\n", prosumer_id, out.message.c_str(), out.rounds);
  return out.ok ? 0 : 1;
}

int cmd_sweep(dopf::harness::SweepSpec spec, const std::string& case_path,
              const std::string& out_dir) {
  using dopf::harness::SweepKind;
  if (!case_path.empty()) {
    if (spec.kind == SweepKind::size)
      throw CLI::ValidationError("--case", "size sweeps build their own minimal-k cases");
    spec.base_case =
        std::make_shared<const dopf::model::Case>(dopf::model::load_case(case_path));
  }
  const auto result = dopf::harness::run_sweep(spec);
  dopf::harness::emit_report(result, out_dir);

  std::printf("%-18s %-10s %5s %12s %10s %10s  flags\n", "point", "status", "k", "r_max[W]",
              "gap[%]", "t9a[ms]");
  for (const auto& r : result.rows)
    std::printf("%-18s %-10s %5d %12.4g %10.3g %10.3g  %s%s%s\n", r.label.c_str(),
                r.status.c_str(), r.k, r.r_max_w, r.gap_percent, r.mean_t9a_ms,
                r.flag_undervoltage ? "V- " : "", r.flag_overvoltage ? "V+ " : "",
                r.flag_feeder ? "feeder" : "");
  if (result.kind == SweepKind::size)
    std::printf("t_9a slope: %.3g ms per prosumer\n", result.t9a_slope_ms_per_prosumer);
  for (const auto& n : result.notes) std::printf("note: %s\n", n.c_str());
  std::printf("report written to %s\n", out_dir.c_str());
  return result.any_failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prosumer DER coordination via distributed OPF"};
  app.require_subcommand(1);

  // case build
  auto* case_cmd = app.add_subcommand("case", "synthetic case tools");
  case_cmd->require_subcommand(1);
  auto* build = case_cmd->add_subcommand("build", "build and save a synthetic case");
  std::string tmpl = "A", horizon = "T1", out_path = "case.json";
  std::uint64_t seed = 7;
  double alpha_d = 1.0, alpha_pv = 1.0;
  build->add_option("--template", tmpl, "A | B | minimal-k")->capture_default_str();
  build->add_option("--horizon", horizon, "T1 | T2 | T1/n")->capture_default_str();
  build->add_option("--seed", seed, "profile seed")->capture_default_str();
  build->add_option("--alpha-d", alpha_d, "demand scaling")->capture_default_str();
  build->add_option("--alpha-pv", alpha_pv, "PV scaling")->capture_default_str();
  build->add_option("--out", out_path, "output path")->capture_default_str();

  // aggregator
  auto* agg = app.add_subcommand("aggregator", "serve the network side over UDP");
  std::string agg_case, agg_bind = "0.0.0.0:7401", history_path;
  dopf::admm::AdmmConfig agg_admm;
  LinkFlags agg_link;
  agg->add_option("--case", agg_case, "case JSON")->required()->check(CLI::ExistingFile);
  agg->add_option("--bind", agg_bind, "listen address")->capture_default_str();
  agg->add_option("--history", history_path, "write convergence history CSV here");
  attach_admm_flags(agg, agg_admm);
  agg_link.attach(agg);

  // agent
  auto* agent = app.add_subcommand("agent", "serve one prosumer over UDP");
  std::string agent_case, server = "127.0.0.1:7401";
  int prosumer_id = 0;
  LinkFlags agent_link;
  agent->add_option("--case", agent_case, "case JSON")->required()->check(CLI::ExistingFile);
  agent->add_option("--server", server, "aggregator host:port")->capture_default_str();
  agent->add_option("--prosumer-id", prosumer_id, "prosumer id to serve")->required();
  agent_link.attach(agent);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "run an experiment sweep");
  dopf::harness::SweepSpec spec;
  std::string sweep_kind, sweep_case, sweep_out = "report";
  std::vector<double> alphas_d, alphas_pv;
  bool no_central = false;
  sweep->add_option("kind", sweep_kind, "tolerance | mix | size")->required();
  sweep->add_option("--case", sweep_case, "case JSON (tolerance/mix)")->check(CLI::ExistingFile);
  sweep->add_option("--template", spec.template_name, "case template")->capture_default_str();
  sweep->add_option("--horizon", spec.horizon_name, "horizon name")->capture_default_str();
  sweep->add_option("--seed", spec.seed, "profile seed")->capture_default_str();
  sweep->add_option("--out", sweep_out, "report directory")->capture_default_str();
  sweep->add_option("--tolerances", spec.tolerances, "eps_abs grid, descending")
      ->delimiter(',');
  sweep->add_option("--alphas-d", alphas_d, "demand scalings (mix)")->delimiter(',');
  sweep->add_option("--alphas-pv", alphas_pv, "PV scalings (mix)")->delimiter(',');
  sweep->add_option("--sizes", spec.sizes, "prosumer counts (size)")->delimiter(',');
  sweep->add_flag("--no-central", no_central, "skip the centralized oracle");
  sweep->add_flag("--loopback", spec.loopback, "run points through the UDP loopback stack");
  attach_admm_flags(sweep, spec.admm);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*build) return cmd_case_build(tmpl, horizon, seed, alpha_d, alpha_pv, out_path);
    if (*agg) return cmd_aggregator(agg_case, agg_bind, agg_admm, agg_link, history_path);
    if (*agent) return cmd_agent(agent_case, server, prosumer_id, agent_link);
    if (*sweep) {
      spec.kind = dopf::harness::sweep_kind_from(sweep_kind);
      spec.centralized_oracle = !no_central;
      if (!alphas_d.empty() || !alphas_pv.empty()) {
        const auto ds = alphas_d.empty() ? std::vector<double>{1.0} : alphas_d;
        const auto pvs = alphas_pv.empty() ? std::vector<double>{1.0} : alphas_pv;
        spec.mix_grid.clear();
        for (double d : ds)
          for (double pv : pvs) spec.mix_grid.emplace_back(d, pv);
      }
      return cmd_sweep(std::move(spec), sweep_case, sweep_out);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
