#include <cmath>
#include <cstdint>

#include "dopf/model/case.hpp"

namespace dopf::model {
namespace {

// splitmix64: tiny, portable, identical on every platform we build on.
std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Deterministic stream keyed by (seed, prosumer index, stream tag) so the
// same prosumer draws the same numbers in every template and horizon.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t prosumer, std::uint64_t stream) {
    state_ = seed;
    splitmix64(state_);
    state_ ^= 0x51d1c4b5a3f2e687ull * (prosumer + 1);
    splitmix64(state_);
    state_ ^= 0x2545f4914f6cdd1dull * (stream + 1);
    splitmix64(state_);
  }

  double uniform(double lo, double hi) {
    double u = (double)(splitmix64(state_) >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
  }

 private:
  std::uint64_t state_;
};

double bell(double h, double center, double width) {
  double z = (h - center) / width;
  return std::exp(-0.5 * z * z);
}

// Two-peak residential demand in kW, clamped to the spec'd 0-5 kW band.
std::vector<double> demand_profile(const Horizon& hz, std::uint64_t seed, int prosumer) {
  Rng rng(seed, (std::uint64_t)prosumer, 0);
  double base = rng.uniform(0.25, 0.45);
  double amp_m = rng.uniform(0.9, 1.5);
  double amp_e = rng.uniform(1.7, 2.4);
  double t_m = rng.uniform(7.2, 8.6);
  double t_e = rng.uniform(17.8, 19.4);
  std::vector<double> d(hz.steps);
  for (int t = 0; t < hz.steps; ++t) {
    double h = hz.hour_of(t);
    double v = base + amp_m * bell(h, t_m, 1.1) + amp_e * bell(h, t_e, 1.9);
    d[t] = std::min(5.0, std::max(0.0, v));
  }
  return d;
}

// Midday PV bell in kW, zero outside daylight.
std::vector<double> pv_profile(const Horizon& hz, std::uint64_t seed, int prosumer) {
  Rng rng(seed, (std::uint64_t)prosumer, 1);
  double amp = rng.uniform(2.8, 4.6);
  double center = rng.uniform(12.3, 13.1);
  std::vector<double> p(hz.steps);
  for (int t = 0; t < hz.steps; ++t) {
    double h = hz.hour_of(t);
    double v = (h > 6.0 && h < 19.5) ? amp * std::pow(bell(h, center, 2.6), 1.3) : 0.0;
    p[t] = (v < 1e-3) ? 0.0 : std::min(5.0, v);
  }
  return p;
}

constexpr double kPowerFactorTan = 0.32868;  // tan(acos(0.95)), lagging

ProsumerProfile make_prosumer(int id, int bus_id, const Horizon& hz, std::uint64_t seed) {
  ProsumerProfile h;
  h.id = id;
  h.bus_id = bus_id;
  h.demand_kw = demand_profile(hz, seed, id);
  h.pv_available_kw = pv_profile(hz, seed, id);
  h.q_demand_kvar.resize(hz.steps);
  for (int t = 0; t < hz.steps; ++t) h.q_demand_kvar[t] = kPowerFactorTan * h.demand_kw[t];
  h.p_min_kw = -20.0;
  h.p_max_kw = 20.0;

  Rng rng(seed, (std::uint64_t)id, 2);
  BatterySpec b;
  b.p_ch_max_kw = rng.uniform(3.2, 4.2);
  b.p_dis_max_kw = b.p_ch_max_kw;
  b.soc_max_kwh = rng.uniform(10.0, 13.5);
  b.soc_min_kwh = 0.1 * b.soc_max_kwh;
  b.soc_init_kwh = 0.5 * b.soc_max_kwh;
  b.eta_ch = 0.95;
  b.eta_dis = 0.95;
  h.battery = b;
  return h;
}

std::vector<double> tou_sequence(const Horizon& hz) {
  std::vector<double> c(hz.steps);
  for (int t = 0; t < hz.steps; ++t) {
    double h = hz.hour_of(t);
    if (h >= 17.0 && h < 21.0)
      c[t] = 0.40;
    else if (h >= 23.0 || h < 7.0)
      c[t] = 0.15;
    else
      c[t] = 0.25;
  }
  return c;
}

// Per-segment series impedance, per-unit on 100 kVA / 400 V. Chosen so the
// unscaled cases stay inside the voltage band with slack while tripling
// demand drives the deepest buses below v_min when uncoordinated.
struct Segment {
  double r, x;
};
constexpr Segment kTrunk{0.0100, 0.0050};
constexpr Segment kLateral{0.0130, 0.0060};

Line make_line(int from, int to, Segment z) {
  double d = z.r * z.r + z.x * z.x;
  return {from, to, z.r / d, -z.x / d};
}

// Radial feeder: a trunk chain off the slack, each trunk bus hanging one
// lateral chain. Every non-slack bus hosts one prosumer.
Case build_radial(const std::string& name, int trunk_len, int lateral_len, const Horizon& hz,
                  std::uint64_t seed) {
  Case c;
  c.name = name;
  c.horizon = hz;
  c.base = BaseValues{};

  Bus slack;
  slack.id = 0;
  slack.is_slack = true;
  c.buses.push_back(slack);

  int next_id = 1;
  for (int i = 0; i < trunk_len; ++i) {
    int trunk_id = next_id++;
    c.buses.push_back(Bus{trunk_id});
    c.lines.push_back(make_line(trunk_id == 1 ? 0 : trunk_id - 1, trunk_id, kTrunk));
    int prev = trunk_id;
    for (int j = 0; j < lateral_len; ++j) {
      int lat_id = next_id++;
      c.buses.push_back(Bus{lat_id});
      c.lines.push_back(make_line(prev, lat_id, kLateral));
      prev = lat_id;
    }
  }

  double total_peak = 0.0;
  int hid = 0;
  for (const auto& b : c.buses) {
    if (b.is_slack) continue;
    auto h = make_prosumer(hid++, b.id, hz, seed);
    for (double d : h.demand_kw) total_peak = std::max(total_peak, d);
    c.prosumers.push_back(std::move(h));
  }

  c.tariff.c_tou = tou_sequence(hz);
  c.tariff.c_fit = 0.08;

  // Feeder-head exchange: generous enough that the mix sweep is limited by
  // voltage, not by the head; cost keeps the import mildly convex.
  double fleet_kw = total_peak * (double)c.prosumers.size();
  c.gen.c2 = 2e-4;
  c.gen.c1 = 0.03;
  c.gen.c0 = 0.0;
  c.gen.p_max_kw = 6.0 * fleet_kw;
  c.gen.p_min_kw = -6.0 * fleet_kw;
  c.gen.q_max_kvar = 4.0 * fleet_kw;
  c.gen.q_min_kvar = -4.0 * fleet_kw;

  validate(c);
  return c;
}

}  // namespace

Case build_case(const std::string& template_name, const Horizon& horizon, std::uint64_t seed) {
  if (template_name == "A") return build_radial("A", 5, 4, horizon, seed);
  if (template_name == "B") return build_radial("B", 10, 4, horizon, seed);
  if (template_name.rfind("minimal-", 0) == 0) {
    int k = 0;
    try {
      k = std::stoi(template_name.substr(8));
    } catch (const std::exception&) {
      throw CaseError("unknown template '" + template_name + "'");
    }
    if (k < 1) throw CaseError("minimal-k needs k >= 1");
    return build_radial(template_name, k, 0, horizon, seed);
  }
  throw CaseError("unknown template '" + template_name + "'");
}

}  // namespace dopf::model
