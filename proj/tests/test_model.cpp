#include <cstdio>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "dopf/model/case.hpp"
#include "dopf/model/case_json.hpp"

using namespace dopf::model;

namespace {

Case tiny_case(bool with_battery = false) {
  Case c;
  c.name = "tiny";
  c.horizon = {2, 12.0};
  Bus slack;
  slack.id = 0;
  slack.is_slack = true;
  c.buses.push_back(slack);
  c.buses.push_back(Bus{1});
  c.lines.push_back(Line{0, 1, 4.0, -12.0});

  ProsumerProfile h;
  h.id = 0;
  h.bus_id = 1;
  h.demand_kw = {1.0, 2.0};
  h.pv_available_kw = {0.5, 0.0};
  h.q_demand_kvar = {0.3, 0.6};
  h.p_min_kw = -10.0;
  h.p_max_kw = 10.0;
  if (with_battery) {
    BatterySpec b;
    b.p_ch_max_kw = 2.0;
    b.p_dis_max_kw = 2.5;
    b.soc_min_kwh = 1.0;
    b.soc_max_kwh = 8.0;
    b.soc_init_kwh = 4.0;
    b.eta_ch = 0.93;
    b.eta_dis = 0.97;
    h.battery = b;
  }
  c.prosumers.push_back(h);

  c.tariff.c_tou = {0.25, 0.40};
  c.tariff.c_fit = 0.08;
  c.gen.c2 = 1e-4;
  c.gen.c1 = 0.02;
  c.gen.p_max_kw = 30.0;
  c.gen.p_min_kw = -30.0;
  c.gen.q_max_kvar = 20.0;
  c.gen.q_min_kvar = -20.0;
  return c;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("built-in horizons cover the full day") {
  CHECK(Horizon::t1().steps == 48);
  CHECK(Horizon::t1().dt_hours == 0.5);
  CHECK(Horizon::t2().steps == 96);
  CHECK(Horizon::t2().dt_hours == 0.25);
  CHECK(Horizon::t1().steps * Horizon::t1().dt_hours == doctest::Approx(24.0));
  CHECK(Horizon::t2().steps * Horizon::t2().dt_hours == doctest::Approx(24.0));
}

TEST_CASE("parse_horizon accepts T1, T2 and coarse T1/n") {
  CHECK(parse_horizon("T1").steps == 48);
  CHECK(parse_horizon("T2").steps == 96);
  const Horizon h = parse_horizon("T1/12");
  CHECK(h.steps == 12);
  CHECK(h.dt_hours == doctest::Approx(2.0));
  CHECK(h.steps * h.dt_hours == doctest::Approx(24.0));
  CHECK(parse_horizon("T1/48").steps == 48);
  CHECK(parse_horizon("T1/48").dt_hours == doctest::Approx(0.5));
  CHECK_THROWS_AS(parse_horizon("T3"), CaseError);
  CHECK_THROWS_AS(parse_horizon("T1/0"), CaseError);
  CHECK_THROWS_AS(parse_horizon("T1/96"), CaseError);
}

TEST_CASE("per-unit conversion") {
  BaseValues base;
  CHECK(to_per_unit(5.0, base) == doctest::Approx(0.05));
  CHECK(to_per_unit(0.0, base) == 0.0);
  for (double x : {-3.3, 0.0, 7.1})
    CHECK(from_per_unit(to_per_unit(x, base), base) == doctest::Approx(x).epsilon(1e-15));
}

TEST_CASE("template sizes follow the two feeders") {
  const Case a = build_case("A", "T1", 7);
  CHECK(a.buses.size() == 26);
  CHECK(a.prosumers.size() == 25);
  CHECK(a.horizon.steps == 48);

  const Case b = build_case("B", "T2", 7);
  CHECK(b.buses.size() == 51);
  CHECK(b.prosumers.size() == 50);
  CHECK(b.horizon.steps == 96);

  const Case m = build_case("minimal-2", "T1", 1);
  CHECK(m.buses.size() == 3);
  CHECK(m.prosumers.size() == 2);
}

TEST_CASE("build_case is deterministic in (template, horizon, seed)") {
  const std::string x = case_to_json(build_case("minimal-2", "T1", 1));
  const std::string y = case_to_json(build_case("minimal-2", "T1", 1));
  CHECK(x == y);
  const std::string z = case_to_json(build_case("minimal-2", "T1", 2));
  CHECK(x != z);
}

TEST_CASE("synthetic profiles stay in the 0-5 kW band at 0.95 power factor") {
  const Case c = build_case("A", "T1", 3);
  for (const auto& h : c.prosumers) {
    for (int t = 0; t < c.horizon.steps; ++t) {
      CHECK(h.demand_kw[t] >= 0.0);
      CHECK(h.demand_kw[t] <= 5.0);
      CHECK(h.pv_available_kw[t] >= 0.0);
      CHECK(h.pv_available_kw[t] <= 5.0);
      CHECK(h.q_demand_kvar[t] == doctest::Approx(0.32868 * h.demand_kw[t]).epsilon(1e-12));
    }
    // the day actually has both peaks and some PV
    double peak = 0.0, pv = 0.0;
    for (int t = 0; t < c.horizon.steps; ++t) {
      peak = std::max(peak, h.demand_kw[t]);
      pv = std::max(pv, h.pv_available_kw[t]);
    }
    CHECK(peak > 1.0);
    CHECK(pv > 1.0);
  }
}

TEST_CASE("import price stays above the feed-in tariff") {
  for (const char* tpl : {"A", "B", "minimal-3"}) {
    const Case c = build_case(tpl, "T1", 11);
    for (double p : c.tariff.c_tou) CHECK(p > c.tariff.c_fit);
  }
}

TEST_CASE("unknown templates and bad minimal sizes are rejected") {
  CHECK_THROWS_AS(build_case("C", "T1", 1), CaseError);
  CHECK_THROWS_AS(build_case("minimal-0", "T1", 1), CaseError);
  CHECK_THROWS_AS(build_case("minimal-x", "T1", 1), CaseError);
}

TEST_CASE("validate rejects structural damage") {
  {
    Case c = tiny_case();
    c.buses.push_back(Bus{1});  // duplicate id
    CHECK_THROWS_AS(validate(c), CaseError);
  }
  {
    Case c = tiny_case();
    c.buses[1].is_slack = true;  // two slacks
    CHECK_THROWS_AS(validate(c), CaseError);
  }
  {
    Case c = tiny_case();
    c.buses[0].is_slack = false;  // none
    CHECK_THROWS_AS(validate(c), CaseError);
  }
  {
    Case c = tiny_case();
    c.buses[1].v_min = 1.2;  // inverted band
    CHECK_THROWS_AS(validate(c), CaseError);
  }
  {
    Case c = tiny_case();
    c.buses.push_back(Bus{2});  // disconnected
    CHECK_THROWS_AS(validate(c), CaseError);
  }
  {
    Case c = tiny_case();
    c.lines[0].g = -1.0;
    CHECK_THROWS_AS(validate(c), CaseError);
  }
  {
    Case c = tiny_case();
    c.lines.push_back(Line{1, 1, 4.0, -12.0});  // self loop
    CHECK_THROWS_AS(validate(c), CaseError);
  }
  {
    Case c = tiny_case();
    c.lines.push_back(Line{1, 0, 4.0, -12.0});  // parallel line
    CHECK_THROWS_AS(validate(c), CaseError);
  }
  {
    Case c = tiny_case();
    c.prosumers[0].bus_id = 0;  // on the slack
    CHECK_THROWS_AS(validate(c), CaseError);
  }
  {
    Case c = tiny_case();
    c.prosumers[0].demand_kw = {1.0};  // wrong length
    CHECK_THROWS_AS(validate(c), CaseError);
  }
  {
    Case c = tiny_case();
    c.prosumers[0].demand_kw[0] = -0.1;
    CHECK_THROWS_AS(validate(c), CaseError);
  }
  {
    Case c = tiny_case();
    c.tariff.c_tou = {0.25};  // horizon mismatch
    CHECK_THROWS_AS(validate(c), CaseError);
  }
  {
    Case c = tiny_case(true);
    c.prosumers[0].battery->soc_init_kwh = 20.0;  // outside band
    CHECK_THROWS_AS(validate(c), CaseError);
  }
  {
    Case c = tiny_case(true);
    c.prosumers[0].battery->eta_ch = 1.4;
    CHECK_THROWS_AS(validate(c), CaseError);
  }
  CHECK_NOTHROW(validate(tiny_case()));
  CHECK_NOTHROW(validate(tiny_case(true)));
}

TEST_CASE("scale_mix scales exactly the profile sequences") {
  const Case c = build_case("minimal-2", "T1/6", 5);

  const Case same = scale_mix(c, 1.0, 1.0);
  for (std::size_t h = 0; h < c.prosumers.size(); ++h)
    for (int t = 0; t < c.horizon.steps; ++t) {
      CHECK(same.prosumers[h].demand_kw[t] == c.prosumers[h].demand_kw[t]);
      CHECK(same.prosumers[h].pv_available_kw[t] == c.prosumers[h].pv_available_kw[t]);
      CHECK(same.prosumers[h].q_demand_kvar[t] == c.prosumers[h].q_demand_kvar[t]);
    }

  const Case heavy = scale_mix(c, 2.0, 0.0);
  for (std::size_t h = 0; h < c.prosumers.size(); ++h)
    for (int t = 0; t < c.horizon.steps; ++t) {
      CHECK(heavy.prosumers[h].demand_kw[t] ==
            doctest::Approx(2.0 * c.prosumers[h].demand_kw[t]));
      CHECK(heavy.prosumers[h].q_demand_kvar[t] ==
            doctest::Approx(2.0 * c.prosumers[h].q_demand_kvar[t]));
      CHECK(heavy.prosumers[h].pv_available_kw[t] == 0.0);
    }

  const Case dark = scale_mix(c, 0.0, 1.0);
  for (const auto& h : dark.prosumers)
    for (double d : h.demand_kw) CHECK(d == 0.0);

  CHECK_THROWS_AS(scale_mix(c, -1.0, 1.0), CaseError);
  CHECK_NOTHROW(validate(heavy));
}

TEST_CASE("problem_size is affine in the horizon and matches the paper's order") {
  const Case c8 = build_case("minimal-3", "T1/8", 1);
  const Case c4 = build_case("minimal-3", "T1/4", 1);
  CHECK(problem_size(c8).n_vars * 4 == problem_size(c4).n_vars * 8);
  CHECK(problem_size(c8).n_cons * 4 == problem_size(c4).n_cons * 8);

  const auto a1 = problem_size(build_case("A", "T1", 7));
  const auto a2 = problem_size(build_case("A", "T2", 7));
  CHECK(a2.n_vars == 2 * a1.n_vars);
  CHECK(a2.n_cons == 2 * a1.n_cons);
  // same order of magnitude as the reference 11088 vars / 9840 cons
  CHECK(a1.n_vars > 11088 / 2);
  CHECK(a1.n_vars < 11088 * 2);
  CHECK(a1.n_cons > 9840 / 4);
  CHECK(a1.n_cons < 9840 * 4);
}

TEST_CASE("json roundtrip preserves the case exactly") {
  for (bool bat : {false, true}) {
    const Case c = tiny_case(bat);
    const std::string doc = case_to_json(c);
    const Case back = case_from_json(doc);
    CHECK(case_to_json(back) == doc);
    CHECK(back.prosumers[0].battery.has_value() == bat);
  }
  const Case big = build_case("A", "T1", 7);
  CHECK(case_to_json(case_from_json(case_to_json(big))) == case_to_json(big));
}

TEST_CASE("json loading rejects foreign or damaged documents") {
  CHECK_THROWS_AS(case_from_json("{"), CaseError);
  CHECK_THROWS_AS(case_from_json("{\"hello\": 1}"), CaseError);
  std::string doc = case_to_json(tiny_case());
  // bump the schema version
  auto pos = doc.find("\"version\"");
  REQUIRE(pos != std::string::npos);
  std::string bad = doc;
  bad.replace(doc.find(':', pos) + 1, doc.find(',', pos) - doc.find(':', pos) - 1, " 999");
  CHECK_THROWS_AS(case_from_json(bad), CaseError);
}

TEST_CASE("save and load through a file") {
  namespace fs = std::filesystem;
  const fs::path p = fs::temp_directory_path() / "dopf-case-roundtrip.json";
  const Case c = build_case("minimal-2", "T1/6", 9);
  save_case(c, p.string());
  const Case back = load_case(p.string());
  CHECK(case_to_json(back) == case_to_json(c));
  fs::remove(p);
  CHECK_THROWS_AS(load_case(p.string()), CaseError);
}

}  // TEST_SUITE
