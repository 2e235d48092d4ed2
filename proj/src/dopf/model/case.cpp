#include "dopf/model/case.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

namespace dopf::model {

int Case::slack_bus() const {
  for (const auto& b : buses)
    if (b.is_slack) return b.id;
  throw CaseError("case has no slack bus");
}

const Bus& Case::bus(int id) const {
  for (const auto& b : buses)
    if (b.id == id) return b;
  throw CaseError("unknown bus id " + std::to_string(id));
}

double to_per_unit(double raw_kw, const BaseValues& base) {
  return raw_kw / base.s_base_kva;
}

double from_per_unit(double pu, const BaseValues& base) {
  return pu * base.s_base_kva;
}

namespace {

void check(bool ok, const std::string& msg) {
  if (!ok) throw CaseError(msg);
}

}  // namespace

void validate(const Case& c) {
  const int T = c.horizon.steps;
  check(T > 0, "horizon must have at least one step");
  check(c.horizon.dt_hours > 0.0, "dt must be positive");
  check(!c.buses.empty(), "case needs buses");
  check(c.base.s_base_kva > 0.0 && c.base.v_base_v > 0.0, "bases must be positive");

  std::set<int> bus_ids;
  int n_slack = 0;
  for (const auto& b : c.buses) {
    check(bus_ids.insert(b.id).second, "duplicate bus id " + std::to_string(b.id));
    check(b.v_min > 0.0 && b.v_min < b.v_max, "bad voltage band on bus " + std::to_string(b.id));
    if (b.is_slack) ++n_slack;
  }
  check(n_slack == 1, "case must have exactly one slack bus");

  std::set<std::pair<int, int>> seen_lines;
  for (const auto& l : c.lines) {
    check(bus_ids.count(l.from_bus) && bus_ids.count(l.to_bus), "line references unknown bus");
    check(l.from_bus != l.to_bus, "self-loop line");
    auto key = std::minmax(l.from_bus, l.to_bus);
    check(seen_lines.insert({key.first, key.second}).second, "parallel line");
    check(l.g > 0.0, "line conductance must be positive");
    check(l.b < 0.0, "line susceptance must be negative");
  }

  // connectivity over the undirected line graph
  if (!c.lines.empty() || c.buses.size() > 1) {
    std::set<int> visited;
    std::queue<int> q;
    q.push(c.buses.front().id);
    visited.insert(c.buses.front().id);
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (const auto& l : c.lines) {
        int v = -1;
        if (l.from_bus == u) v = l.to_bus;
        if (l.to_bus == u) v = l.from_bus;
        if (v >= 0 && !visited.count(v)) {
          visited.insert(v);
          q.push(v);
        }
      }
    }
    check(visited.size() == c.buses.size(), "network graph is not connected");
  }

  check(c.gen.p_min_kw <= c.gen.p_max_kw, "generator p bounds inverted");
  check(c.gen.q_min_kvar <= c.gen.q_max_kvar, "generator q bounds inverted");
  check((int)c.tariff.c_tou.size() == T, "tariff length must match horizon");
  for (double p : c.tariff.c_tou) check(p >= 0.0, "negative import price");
  check(c.tariff.c_fit >= 0.0, "negative feed-in tariff");

  const int slack = c.slack_bus();
  std::set<int> prosumer_ids;
  for (const auto& h : c.prosumers) {
    const std::string tag = " (prosumer " + std::to_string(h.id) + ")";
    check(prosumer_ids.insert(h.id).second, "duplicate prosumer id" + tag);
    check(bus_ids.count(h.bus_id), "prosumer on unknown bus" + tag);
    check(h.bus_id != slack, "prosumer cannot sit on the slack bus" + tag);
    check((int)h.demand_kw.size() == T, "demand length" + tag);
    check((int)h.pv_available_kw.size() == T, "pv length" + tag);
    check((int)h.q_demand_kvar.size() == T, "q demand length" + tag);
    for (double d : h.demand_kw) check(d >= 0.0, "negative demand" + tag);
    for (double p : h.pv_available_kw) check(p >= 0.0, "negative pv ceiling" + tag);
    check(h.p_min_kw < h.p_max_kw, "net power bounds inverted" + tag);
    if (h.battery) {
      const auto& b = *h.battery;
      check(b.p_ch_max_kw >= 0.0 && b.p_dis_max_kw >= 0.0, "battery power limits" + tag);
      check(b.soc_min_kwh <= b.soc_max_kwh, "soc bounds inverted" + tag);
      check(b.soc_init_kwh >= b.soc_min_kwh && b.soc_init_kwh <= b.soc_max_kwh,
            "initial soc outside band" + tag);
      check(b.eta_ch > 0.0 && b.eta_ch <= 1.0, "charge efficiency" + tag);
      check(b.eta_dis > 0.0 && b.eta_dis <= 1.0, "discharge efficiency" + tag);
    }
  }
}

// Per timestep the centralized program carries:
//   network: v on every bus (the slack magnitude is a fixed variable), theta
//            on every non-slack bus (slack is the angle reference), and the
//            feeder exchange p_g, q_g. That is B + (B-1) + 2 = 2(B-1)+3.
//   prosumer h: p_net, p_imp, p_exp, pv, and with a battery p_ch, p_dis, soc.
// Equalities per timestep: 2 power-flow balances per bus (slack included,
// they define p_g, q_g), the prosumer power balance, the import/export split
// link, and the SoC recursion when a battery is present.
ProblemSize problem_size(const Case& c) {
  const long T = c.horizon.steps;
  const long n_bus = (long)c.buses.size();
  long per_t_vars = 2 * (n_bus - 1) + 3;
  long per_t_cons = 2 * n_bus;
  for (const auto& h : c.prosumers) {
    per_t_vars += 4 + (h.battery ? 3 : 0);  // p_net, p_imp, p_exp, pv (+ p_ch, p_dis, soc)
    per_t_cons += 2 + (h.battery ? 1 : 0);  // balance + split link (+ soc recursion)
  }
  return {T * per_t_vars, T * per_t_cons};
}

Case scale_mix(const Case& c, double alpha_d, double alpha_pv) {
  check(alpha_d >= 0.0 && alpha_pv >= 0.0, "scaling factors must be nonnegative");
  Case out = c;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "-d%.2f-pv%.2f", alpha_d, alpha_pv);
  out.name = c.name + buf;
  for (auto& h : out.prosumers) {
    for (auto& d : h.demand_kw) d *= alpha_d;
    for (auto& q : h.q_demand_kvar) q *= alpha_d;
    for (auto& p : h.pv_available_kw) p *= alpha_pv;
  }
  return out;
}

Horizon parse_horizon(const std::string& name) {
  if (name == "T1") return Horizon::t1();
  if (name == "T2") return Horizon::t2();
  if (name.rfind("T1/", 0) == 0) {
    int n = std::stoi(name.substr(3));
    if (n <= 0 || n > 48) throw CaseError("bad horizon " + name);
    return {n, 24.0 / n};
  }
  throw CaseError("unknown horizon '" + name + "' (expected T1, T2 or T1/n)");
}

Case build_case(const std::string& template_name, const std::string& horizon_name,
                std::uint64_t seed) {
  return build_case(template_name, parse_horizon(horizon_name), seed);
}

}  // namespace dopf::model
