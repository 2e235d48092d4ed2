#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dopf::model {

/// Discretization of the scheduling day: `steps` intervals of `dt_hours` each.
struct Horizon {
  int steps = 0;
  double dt_hours = 0.0;

  static Horizon t1() { return {48, 0.5}; }   // half-hourly day
  static Horizon t2() { return {96, 0.25}; }  // quarter-hourly day

  /// Mid-interval clock time in hours, used by the synthetic profile shapes.
  double hour_of(int t) const { return (t + 0.5) * dt_hours; }
};

struct Bus {
  int id = 0;
  double v_min = 0.95;  // p.u.
  double v_max = 1.05;  // p.u.
  bool is_slack = false;
};

/// Series admittance of a line in p.u.; g > 0, b < 0 for the usual R-X cable.
struct Line {
  int from_bus = 0;
  int to_bus = 0;
  double g = 0.0;
  double b = 0.0;
};

/// Quadratic import cost at the feeder head plus box limits on the feeder
/// exchange. Coefficients are in $/kW^2, $/kW and $ per timestep.
struct GeneratorCost {
  double c2 = 0.0;
  double c1 = 0.0;
  double c0 = 0.0;
  double p_min_kw = 0.0;
  double p_max_kw = 0.0;
  double q_min_kvar = 0.0;
  double q_max_kvar = 0.0;
};

struct Tariff {
  std::vector<double> c_tou;  // $/kWh import price per timestep
  double c_fit = 0.0;         // $/kWh export price
};

struct BatterySpec {
  double p_ch_max_kw = 0.0;
  double p_dis_max_kw = 0.0;
  double soc_min_kwh = 0.0;
  double soc_max_kwh = 0.0;
  double soc_init_kwh = 0.0;
  double eta_ch = 1.0;
  double eta_dis = 1.0;
};

struct ProsumerProfile {
  int id = 0;
  int bus_id = 0;
  std::vector<double> demand_kw;        // fixed load, >= 0
  std::vector<double> pv_available_kw;  // curtailable PV ceiling, >= 0
  std::vector<double> q_demand_kvar;    // fixed reactive load
  double p_min_kw = 0.0;                // net power lower bound (export)
  double p_max_kw = 0.0;                // net power upper bound (import)
  std::optional<BatterySpec> battery;
};

struct BaseValues {
  double s_base_kva = 100.0;
  double v_base_v = 400.0;
};

/// Immutable scenario: network, costs, prosumer fleet and horizon.
/// All electrical quantities on the network side are per-unit; prosumer
/// profiles are kept in kW and converted by the problem builders.
struct Case {
  std::string name;
  std::vector<Bus> buses;
  std::vector<Line> lines;
  GeneratorCost gen;
  Tariff tariff;
  std::vector<ProsumerProfile> prosumers;
  Horizon horizon;
  BaseValues base;

  int slack_bus() const;
  const Bus& bus(int id) const;
};

struct ProblemSize {
  long n_vars = 0;
  long n_cons = 0;
};

class CaseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double to_per_unit(double raw_kw, const BaseValues& base);
double from_per_unit(double pu, const BaseValues& base);

/// Throws CaseError when any structural invariant fails: connected graph,
/// exactly one slack, ordered bounds, profile lengths matching the horizon.
void validate(const Case& c);

/// Decision variable / equality constraint counts of the centralized program
/// under the canonical formulation (see problem_size in case.cpp for the
/// closed form).
ProblemSize problem_size(const Case& c);

/// New case with demand scaled by alpha_d and available PV by alpha_pv
/// (reactive demand follows the active scaling).
Case scale_mix(const Case& c, double alpha_d, double alpha_pv);

/// Deterministic synthetic cases. Template names: "A" (26 buses), "B"
/// (51 buses), "minimal-k" (k prosumers on a k+1 bus radial feeder).
/// Horizon names: "T1", "T2", or "T1/n" for a coarse full-day horizon of
/// n steps (desk-scale testing; the day still spans 24 h).
Case build_case(const std::string& template_name, const std::string& horizon_name,
                std::uint64_t seed);
Case build_case(const std::string& template_name, const Horizon& horizon, std::uint64_t seed);

Horizon parse_horizon(const std::string& name);

}  // namespace dopf::model
