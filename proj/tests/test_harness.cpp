#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "dopf/admm/engine.hpp"
#include "dopf/admm/history_csv.hpp"
#include "dopf/harness/report.hpp"
#include "dopf/harness/sweeps.hpp"
#include "dopf/model/case.hpp"
#include "dopf/opf/network_problem.hpp"

using namespace dopf;
namespace fs = std::filesystem;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

harness::SweepRow sample_row(int variant) {
  harness::SweepRow r;
  r.label = variant == 0 ? "eps-1e-02" : "d1.50-pv0.00";
  r.eps_abs = variant == 0 ? 1e-2 : 0.0;
  r.alpha_d = 1.5;
  r.alpha_pv = 0.0;
  r.size = variant;
  r.status = variant == 0 ? "converged" : "max_iter";
  r.k = 17 + variant;
  r.r_norm = 0.1;
  r.s_norm = 1e-17;
  r.eps_pri = 0.30000000000000004;
  r.eps_dual = 0.017453292519943295;
  r.objective = -12.75;
  r.gap_percent = variant == 0 ? 0.83 : kNan;
  r.r_max_w = 42.5;
  r.r_mean_w = 3.25;
  r.mean_t9a_ms = 1.5;
  r.mean_t9b_ms = 2.5;
  r.mean_t9c_ms = 0.125;
  r.mean_t9b_solo_ms = 2.0;
  r.total_bytes_up = 123456789012ULL;
  r.total_bytes_down = 87654321ULL;
  r.flag_undervoltage = variant == 1;
  r.flag_overvoltage = false;
  r.flag_feeder = variant == 0;
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  return p;
}

std::set<std::string> dir_listing(const fs::path& p) {
  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(p)) names.insert(e.path().filename().string());
  return names;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("sweep CSV round-trips rows exactly") {
  const std::vector<harness::SweepRow> rows = {sample_row(0), sample_row(1)};
  std::stringstream ss;
  harness::write_sweep_csv(ss, rows);
  std::string first_line;
  {
    std::stringstream probe(ss.str());
    std::getline(probe, first_line);
  }
  CHECK(first_line == harness::kSweepHeader);

  const auto back = harness::read_sweep_csv(ss);
  REQUIRE(back.size() == 2);
  CHECK(harness::rows_equal(back[0], rows[0]));
  CHECK(harness::rows_equal(back[1], rows[1]));
  CHECK(std::isnan(back[1].gap_percent));
  CHECK(back[1].flag_undervoltage);
  CHECK(back[0].flag_feeder);
}

TEST_CASE("sweep CSV rejects foreign input") {
  {
    std::stringstream ss("a,b,c\n1,2,3\n");
    CHECK_THROWS_AS(harness::read_sweep_csv(ss), std::runtime_error);
  }
  {
    std::stringstream ss(std::string(harness::kSweepHeader) + "\nonly,three,fields\n");
    CHECK_THROWS_AS(harness::read_sweep_csv(ss), std::runtime_error);
  }
  {
    std::stringstream ss(std::string(harness::kSweepHeader) + "\n");
    CHECK(harness::read_sweep_csv(ss).empty());
  }
  {
    // blank lines are tolerated
    std::vector<harness::SweepRow> rows = {sample_row(0)};
    std::stringstream ss;
    harness::write_sweep_csv(ss, rows);
    std::stringstream padded(ss.str() + "\n\n");
    CHECK(harness::read_sweep_csv(padded).size() == 1);
  }
}

TEST_CASE("rows_equal treats NaN as equal to NaN only") {
  harness::SweepRow a = sample_row(1), b = sample_row(1);
  CHECK(harness::rows_equal(a, b));
  b.gap_percent = 0.0;
  CHECK(!harness::rows_equal(a, b));
  b = sample_row(1);
  b.k += 1;
  CHECK(!harness::rows_equal(a, b));
}

TEST_CASE("default mix grid") {
  const auto g = harness::default_mix_grid();
  REQUIRE(g.size() == 30);
  CHECK(g[0] == std::pair<double, double>{0.5, 0.0});
  CHECK(g[4] == std::pair<double, double>{0.5, 2.0});
  CHECK(g[5] == std::pair<double, double>{1.0, 0.0});
  bool has_nominal = false;
  for (const auto& p : g)
    if (p.first == 1.0 && p.second == 1.0) has_nominal = true;
  CHECK(has_nominal);
}

TEST_CASE("sweep kind names round-trip") {
  for (auto k : {harness::SweepKind::tolerance, harness::SweepKind::mix, harness::SweepKind::size})
    CHECK(harness::sweep_kind_from(harness::to_string(k)) == k);
  CHECK_THROWS_AS(harness::sweep_kind_from("congestion"), std::invalid_argument);
}

TEST_CASE("tolerance sweep validates its grid") {
  harness::SweepSpec spec;
  spec.tolerances = {};
  CHECK_THROWS_AS(harness::run_tolerance_sweep(spec), std::invalid_argument);
  spec.tolerances = {1e-3, 1e-2};
  CHECK_THROWS_AS(harness::run_tolerance_sweep(spec), std::invalid_argument);
  spec.tolerances = {1e-2, -1e-3};
  CHECK_THROWS_AS(harness::run_tolerance_sweep(spec), std::invalid_argument);
  spec.tolerances = {1e-2, 1e-2};
  CHECK_THROWS_AS(harness::run_tolerance_sweep(spec), std::invalid_argument);
}

TEST_CASE("a single-point tolerance sweep reproduces a direct run") {
  auto base = std::make_shared<model::Case>(model::build_case("minimal-2", "T1/6", 12));
  harness::SweepSpec spec;
  spec.kind = harness::SweepKind::tolerance;
  spec.base_case = base;
  spec.tolerances = {1e-3};
  spec.centralized_oracle = false;

  const harness::SweepResult sweep = harness::run_sweep(spec);
  REQUIRE(sweep.rows.size() == 1);
  REQUIRE(sweep.histories.size() == 1);

  admm::AdmmConfig cfg = spec.admm;
  cfg.eps_abs = 1e-3;
  cfg.eps_rel = 0.0;
  const admm::AdmmResult direct = admm::run_admm(*base, cfg);
  REQUIRE(direct.status == admm::RunStatus::converged);

  const harness::SweepRow& row = sweep.rows[0];
  CHECK(row.label == "eps-1e-03");
  CHECK(row.eps_abs == 1e-3);
  CHECK(row.status == "converged");
  CHECK(row.k == direct.iterations());
  CHECK(row.r_norm == direct.history.back().r_norm);
  CHECK(row.s_norm == direct.history.back().s_norm);
  CHECK(row.eps_pri == direct.history.back().eps_pri);
  CHECK(row.eps_dual == direct.history.back().eps_dual);
  CHECK(row.objective == direct.history.back().objective);
  CHECK(std::isnan(row.gap_percent));
  CHECK(std::isnan(sweep.centralized_objective));

  const double to_w = base->base.s_base_kva * 1000.0;
  const double rmax = (direct.state.p_hat - direct.state.p).cwiseAbs().maxCoeff() * to_w;
  CHECK(row.r_max_w == doctest::Approx(rmax));
  CHECK(row.r_norm <= row.eps_pri);
  CHECK(row.s_norm <= row.eps_dual);
  CHECK(!sweep.any_failed);
  REQUIRE(sweep.histories[0].size() == direct.history.size());
  for (std::size_t i = 0; i < direct.history.size(); ++i)
    CHECK(sweep.histories[0][i].r_norm == direct.history[i].r_norm);
}

TEST_CASE("tolerance sweep with oracle, then the full report artifact set") {
  auto base = std::make_shared<model::Case>(model::build_case("minimal-2", "T1/6", 12));
  harness::SweepSpec spec;
  spec.base_case = base;
  spec.tolerances = {1e-2, 1e-3};
  spec.centralized_oracle = true;

  const harness::SweepResult sweep = harness::run_tolerance_sweep(spec);
  REQUIRE(sweep.rows.size() == 2);
  CHECK(std::isfinite(sweep.centralized_objective));
  CHECK(!sweep.any_failed);
  for (const auto& row : sweep.rows) {
    CHECK(row.status == "converged");
    CHECK(std::isfinite(row.gap_percent));
  }
  // the tighter point leaves a smaller consensus gap
  CHECK(sweep.rows[1].r_max_w < sweep.rows[0].r_max_w);
  CHECK(sweep.rows[1].r_norm < sweep.rows[0].r_norm);

  const fs::path dir = fresh_dir("dopf-test-report");
  harness::emit_report(sweep, dir.string());
  const auto names = dir_listing(dir);
  CHECK(names == std::set<std::string>{"sweep.csv", "history-eps-1e-02.csv",
                                       "history-eps-1e-03.csv", "plot-k-vs-tolerance.svg",
                                       "plot-residuals.svg"});

  const auto back = harness::read_sweep_csv((dir / "sweep.csv").string());
  REQUIRE(back.size() == 2);
  CHECK(harness::rows_equal(back[0], sweep.rows[0]));
  CHECK(harness::rows_equal(back[1], sweep.rows[1]));

  const auto hist = admm::read_history_csv((dir / "history-eps-1e-03.csv").string());
  REQUIRE(hist.size() == sweep.histories[1].size());
  CHECK(hist.back().r_norm == sweep.histories[1].back().r_norm);

  std::ifstream svg(dir / "plot-residuals.svg");
  std::string blob((std::istreambuf_iterator<char>(svg)), std::istreambuf_iterator<char>());
  CHECK(blob.find("<svg") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("an empty sweep emits a bare header and no plots") {
  harness::SweepResult empty;
  empty.kind = harness::SweepKind::tolerance;
  const fs::path dir = fresh_dir("dopf-test-report-empty");
  harness::emit_report(empty, dir.string());
  const auto names = dir_listing(dir);
  CHECK(names == std::set<std::string>{"sweep.csv"});
  std::ifstream in(dir / "sweep.csv");
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(content == std::string(harness::kSweepHeader) + "\n");
  fs::remove_all(dir);
}

TEST_CASE("size sweep fits a cost slope over the fleet sizes") {
  harness::SweepSpec spec;
  spec.kind = harness::SweepKind::size;
  spec.horizon_name = "T1/8";
  spec.seed = 3;
  spec.sizes = {2, 4};
  spec.admm.eps_abs = 1e-3;

  const harness::SweepResult sweep = harness::run_sweep(spec);
  REQUIRE(sweep.rows.size() == 2);
  CHECK(sweep.rows[0].label == "n-2");
  CHECK(sweep.rows[1].label == "n-4");
  CHECK(sweep.rows[0].size == 2);
  CHECK(sweep.rows[1].size == 4);
  for (const auto& row : sweep.rows) {
    CHECK(row.status == "converged");
    CHECK(row.mean_t9a_ms > 0.0);
    CHECK(row.mean_t9b_solo_ms > 0.0);
    CHECK(row.mean_t9b_solo_ms <= row.mean_t9b_ms + 1e-9);
  }
  CHECK(std::isfinite(sweep.t9a_slope_ms_per_prosumer));

  const fs::path dir = fresh_dir("dopf-test-report-size");
  harness::emit_report(sweep, dir.string());
  const auto names = dir_listing(dir);
  CHECK(names.count("plot-k-vs-size.svg") == 1);
  CHECK(names.count("plot-residuals.svg") == 1);
  fs::remove_all(dir);
}

TEST_CASE("mix sweep scales the base case point by point") {
  auto base = std::make_shared<model::Case>(model::build_case("minimal-2", "T1/6", 12));
  harness::SweepSpec spec;
  spec.kind = harness::SweepKind::mix;
  spec.base_case = base;
  spec.mix_grid = {{1.0, 1.0}, {2.0, 0.0}};
  spec.admm.eps_abs = 1e-3;

  const harness::SweepResult sweep = harness::run_sweep(spec);
  REQUIRE(sweep.rows.size() == 2);
  CHECK(sweep.rows[0].label == "d1.00-pv1.00");
  CHECK(sweep.rows[1].label == "d2.00-pv0.00");
  CHECK(sweep.rows[0].alpha_d == 1.0);
  CHECK(sweep.rows[1].alpha_pv == 0.0);
  for (const auto& row : sweep.rows) {
    CHECK((row.status == "converged" || row.status == "max_iter"));
    CHECK(std::isnan(row.gap_percent));
  }
  REQUIRE(sweep.histories.size() == 2);
  CHECK(!sweep.histories[0].empty());

  const fs::path dir = fresh_dir("dopf-test-report-mix");
  harness::emit_report(sweep, dir.string());
  CHECK(dir_listing(dir).count("plot-k-vs-mix.svg") == 1);
  fs::remove_all(dir);
}

TEST_CASE("centralized oracle refuses oversized cases") {
  std::string note;
  const double big = harness::centralized_objective(model::build_case("minimal-4", "T1", 1),
                                                    &note);
  CHECK(std::isnan(big));
  CHECK(note.find("exceed") != std::string::npos);

  note.clear();
  const double small =
      harness::centralized_objective(model::build_case("minimal-2", "T1/6", 12), &note);
  CHECK(std::isfinite(small));
  CHECK(note.empty());
}

TEST_CASE("binding flags fire exactly at the bounds") {
  const model::Case c = model::build_case("minimal-2", "T1/2", 1);
  const Eigen::MatrixXd z = Eigen::MatrixXd::Zero(2, c.horizon.steps);
  const opf::NetworkProblem np = opf::build_network_subproblem(c, z, z, 1.0);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(np.idx.n());
  for (int t = 0; t < np.idx.nt; ++t)
    for (int k = 0; k < np.idx.nb - 1; ++k) x[np.idx.var_v(t, k)] = 1.0;

  auto flags = harness::binding_flags(c, np.idx, x);
  CHECK(!flags.undervoltage);
  CHECK(!flags.overvoltage);
  CHECK(!flags.feeder);

  x[np.idx.var_v(0, 0)] = c.buses[1].v_min;
  flags = harness::binding_flags(c, np.idx, x);
  CHECK(flags.undervoltage);

  x[np.idx.var_v(0, 0)] = 1.0;
  x[np.idx.var_v(1, 1)] = c.buses[2].v_max;
  flags = harness::binding_flags(c, np.idx, x);
  CHECK(flags.overvoltage);
  CHECK(!flags.undervoltage);

  x[np.idx.var_v(1, 1)] = 1.0;
  x[np.idx.var_pgp(0)] = model::to_per_unit(c.gen.p_max_kw, c.base);
  flags = harness::binding_flags(c, np.idx, x);
  CHECK(flags.feeder);

  // a loose tolerance widens the detection band
  x[np.idx.var_pgp(0)] = 0.0;
  x[np.idx.var_v(0, 0)] = c.buses[1].v_min + 5e-4;
  CHECK(!harness::binding_flags(c, np.idx, x).undervoltage);
  CHECK(harness::binding_flags(c, np.idx, x, 1e-3).undervoltage);
}

TEST_CASE("a loopback sweep point walks the same iterates as in-process") {
  auto base = std::make_shared<model::Case>(model::build_case("minimal-2", "T1/6", 12));
  harness::SweepSpec spec;
  spec.base_case = base;
  spec.tolerances = {1e-3};
  spec.centralized_oracle = false;
  spec.loopback = true;

  const harness::SweepResult remote = harness::run_tolerance_sweep(spec);
  REQUIRE(remote.rows.size() == 1);
  REQUIRE(remote.rows[0].status == "converged");

  spec.loopback = false;
  const harness::SweepResult local = harness::run_tolerance_sweep(spec);
  CHECK(remote.rows[0].k == local.rows[0].k);
  CHECK(remote.rows[0].r_norm == local.rows[0].r_norm);
  CHECK(remote.rows[0].s_norm == local.rows[0].s_norm);
  CHECK(remote.rows[0].objective == local.rows[0].objective);
  CHECK(remote.rows[0].r_max_w == local.rows[0].r_max_w);
  CHECK(remote.rows[0].total_bytes_down > 0);
  CHECK(local.rows[0].total_bytes_down == 0);
}

}  // TEST_SUITE
