#include "dopf/model/case_json.hpp"

#include <fstream>

#include "json.hpp"

namespace dopf::model {

using nlohmann::json;

namespace {

json battery_to_json(const BatterySpec& b) {
  return json{{"p_ch_max_kw", b.p_ch_max_kw}, {"p_dis_max_kw", b.p_dis_max_kw},
              {"soc_min_kwh", b.soc_min_kwh}, {"soc_max_kwh", b.soc_max_kwh},
              {"soc_init_kwh", b.soc_init_kwh}, {"eta_ch", b.eta_ch},
              {"eta_dis", b.eta_dis}};
}

BatterySpec battery_from_json(const json& j) {
  BatterySpec b;
  b.p_ch_max_kw = j.at("p_ch_max_kw");
  b.p_dis_max_kw = j.at("p_dis_max_kw");
  b.soc_min_kwh = j.at("soc_min_kwh");
  b.soc_max_kwh = j.at("soc_max_kwh");
  b.soc_init_kwh = j.at("soc_init_kwh");
  b.eta_ch = j.at("eta_ch");
  b.eta_dis = j.at("eta_dis");
  return b;
}

}  // namespace

std::string case_to_json(const Case& c) {
  json j;
  j["schema"] = "dopf-case";
  j["version"] = kCaseSchemaVersion;
  j["name"] = c.name;
  j["horizon"] = {{"steps", c.horizon.steps}, {"dt_hours", c.horizon.dt_hours}};
  j["base"] = {{"s_base_kva", c.base.s_base_kva}, {"v_base_v", c.base.v_base_v}};

  j["buses"] = json::array();
  for (const auto& b : c.buses)
    j["buses"].push_back({{"id", b.id},
                          {"v_min", b.v_min},
                          {"v_max", b.v_max},
                          {"is_slack", b.is_slack}});

  j["lines"] = json::array();
  for (const auto& l : c.lines)
    j["lines"].push_back({{"from", l.from_bus}, {"to", l.to_bus}, {"g", l.g}, {"b", l.b}});

  j["gen"] = {{"c2", c.gen.c2},
              {"c1", c.gen.c1},
              {"c0", c.gen.c0},
              {"p_min_kw", c.gen.p_min_kw},
              {"p_max_kw", c.gen.p_max_kw},
              {"q_min_kvar", c.gen.q_min_kvar},
              {"q_max_kvar", c.gen.q_max_kvar}};

  j["tariff"] = {{"c_tou", c.tariff.c_tou}, {"c_fit", c.tariff.c_fit}};

  j["prosumers"] = json::array();
  for (const auto& h : c.prosumers) {
    json p = {{"id", h.id},
              {"bus_id", h.bus_id},
              {"demand_kw", h.demand_kw},
              {"pv_available_kw", h.pv_available_kw},
              {"q_demand_kvar", h.q_demand_kvar},
              {"p_min_kw", h.p_min_kw},
              {"p_max_kw", h.p_max_kw}};
    if (h.battery) p["battery"] = battery_to_json(*h.battery);
    j["prosumers"].push_back(std::move(p));
  }
  return j.dump(2);
}

Case case_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CaseError(std::string("case JSON parse error: ") + e.what());
  }
  try {
    if (j.at("schema") != "dopf-case")
      throw CaseError("not a dopf-case document");
    if (j.at("version") != kCaseSchemaVersion)
      throw CaseError("unsupported case schema version");

    Case c;
    c.name = j.at("name");
    c.horizon.steps = j.at("horizon").at("steps");
    c.horizon.dt_hours = j.at("horizon").at("dt_hours");
    c.base.s_base_kva = j.at("base").at("s_base_kva");
    c.base.v_base_v = j.at("base").at("v_base_v");

    for (const auto& bj : j.at("buses")) {
      Bus b;
      b.id = bj.at("id");
      b.v_min = bj.at("v_min");
      b.v_max = bj.at("v_max");
      b.is_slack = bj.at("is_slack");
      c.buses.push_back(b);
    }
    for (const auto& lj : j.at("lines")) {
      Line l;
      l.from_bus = lj.at("from");
      l.to_bus = lj.at("to");
      l.g = lj.at("g");
      l.b = lj.at("b");
      c.lines.push_back(l);
    }
    const auto& gj = j.at("gen");
    c.gen.c2 = gj.at("c2");
    c.gen.c1 = gj.at("c1");
    c.gen.c0 = gj.at("c0");
    c.gen.p_min_kw = gj.at("p_min_kw");
    c.gen.p_max_kw = gj.at("p_max_kw");
    c.gen.q_min_kvar = gj.at("q_min_kvar");
    c.gen.q_max_kvar = gj.at("q_max_kvar");

    c.tariff.c_tou = j.at("tariff").at("c_tou").get<std::vector<double>>();
    c.tariff.c_fit = j.at("tariff").at("c_fit");

    for (const auto& pj : j.at("prosumers")) {
      ProsumerProfile h;
      h.id = pj.at("id");
      h.bus_id = pj.at("bus_id");
      h.demand_kw = pj.at("demand_kw").get<std::vector<double>>();
      h.pv_available_kw = pj.at("pv_available_kw").get<std::vector<double>>();
      h.q_demand_kvar = pj.at("q_demand_kvar").get<std::vector<double>>();
      h.p_min_kw = pj.at("p_min_kw");
      h.p_max_kw = pj.at("p_max_kw");
      if (pj.contains("battery")) h.battery = battery_from_json(pj.at("battery"));
      c.prosumers.push_back(std::move(h));
    }

    validate(c);
    return c;
  } catch (const json::exception& e) {
    throw CaseError(std::string("case JSON field error: ") + e.what());
  }
}

void save_case(const Case& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw CaseError("cannot open " + path + " for writing");
  out << case_to_json(c) << "\n";
}

Case load_case(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CaseError("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return case_from_json(text);
}

}  // namespace dopf::model
