#include "uep/power/case.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

namespace uep::power {

Index PowerCase::bus_index(int id) const {
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].id == id) return static_cast<Index>(i);
  }
  throw InputError("unknown bus id " + std::to_string(id));
}

Index PowerCase::slack_index() const {
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].slack) return static_cast<Index>(i);
  }
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].type == BusType::generator) return static_cast<Index>(i);
  }
  throw InputError("case '" + name + "' has no generator bus to act as slack");
}

void PowerCase::validate() const {
  if (buses.empty()) throw InputError("case '" + name + "' has no buses");
  if (machines.empty()) throw InputError("case '" + name + "' has no machines");
  if (!(base_mva > 0.0)) throw InputError("base_mva must be positive");
  std::set<int> ids;
  int slacks = 0;
  for (const auto& b : buses) {
    if (!ids.insert(b.id).second) throw InputError("duplicate bus id " + std::to_string(b.id));
    if (b.slack) {
      ++slacks;
      if (b.type != BusType::generator) throw InputError("slack bus must be a generator bus");
    }
  }
  if (slacks > 1) throw InputError("case '" + name + "' has more than one slack bus");
  for (const auto& l : lines) {
    bus_index(l.from);
    bus_index(l.to);
    if (l.from == l.to) throw InputError("line connects bus " + std::to_string(l.from) + " to itself");
  }
  std::set<int> machine_buses;
  for (const auto& m : machines) {
    const auto& bus = buses[static_cast<std::size_t>(bus_index(m.bus))];
    if (bus.type != BusType::generator) {
      throw InputError("machine at bus " + std::to_string(m.bus) + " is not on a generator bus");
    }
    if (!machine_buses.insert(m.bus).second) {
      throw InputError("more than one machine at bus " + std::to_string(m.bus));
    }
    if (!(m.inertia > 0.0)) throw InputError("machine inertia must be positive");
    if (!(m.xd_prime > 0.0)) throw InputError("machine transient reactance must be positive");
  }
  for (const auto& b : buses) {
    if (b.type == BusType::generator && !machine_buses.count(b.id)) {
      throw InputError("generator bus " + std::to_string(b.id) + " has no machine");
    }
  }
}

namespace {

double get_or(const Json& j, const char* key, double fallback) {
  return j.contains(key) ? j[key].get<double>() : fallback;
}

}  // namespace

PowerCase case_from_json(const Json& j) {
  PowerCase c;
  try {
    c.name = j.value("name", std::string("case"));
    c.base_mva = get_or(j, "base_mva", 100.0);
    c.frequency_hz = get_or(j, "frequency_hz", 60.0);
    for (const auto& jb : j.at("buses")) {
      Bus b;
      b.id = jb.at("id").get<int>();
      const auto type = jb.at("type").get<std::string>();
      if (type == "generator") b.type = BusType::generator;
      else if (type == "load") b.type = BusType::load;
      else throw InputError("bus type must be 'generator' or 'load', got '" + type + "'");
      b.p_load = get_or(jb, "p_load", 0.0);
      b.q_load = get_or(jb, "q_load", 0.0);
      b.b_shunt = get_or(jb, "b_shunt", 0.0);
      b.v_set = get_or(jb, "v_set", 1.0);
      b.p_set = get_or(jb, "p_set", 0.0);
      b.slack = jb.value("slack", false);
      c.buses.push_back(b);
    }
    for (const auto& jl : j.at("lines")) {
      Line l;
      l.from = jl.at("from").get<int>();
      l.to = jl.at("to").get<int>();
      l.r = get_or(jl, "r", 0.0);
      l.x = jl.at("x").get<double>();
      l.b_half = get_or(jl, "b_half", 0.0);
      l.in_service = jl.value("in_service", true);
      c.lines.push_back(l);
    }
    const double omega_s = 2.0 * std::numbers::pi * c.frequency_hz;
    for (const auto& jm : j.at("machines")) {
      Machine m;
      m.bus = jm.at("bus").get<int>();
      if (jm.contains("M") == jm.contains("H")) {
        throw InputError("machine at bus " + std::to_string(m.bus) + " needs exactly one of M, H");
      }
      m.inertia = jm.contains("M") ? jm["M"].get<double>() : 2.0 * jm["H"].get<double>() / omega_s;
      if (jm.contains("D") == jm.contains("damping_ratio")) {
        throw InputError("machine at bus " + std::to_string(m.bus) +
                         " needs exactly one of D, damping_ratio");
      }
      m.damping = jm.contains("D") ? jm["D"].get<double>()
                                   : jm["damping_ratio"].get<double>() * m.inertia;
      m.xd_prime = jm.at("xd_prime").get<double>();
      if (jm.contains("pm")) m.pm = jm["pm"].get<double>();
      if (jm.contains("eq_prime")) m.eq_prime = jm["eq_prime"].get<double>();
      c.machines.push_back(m);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed case: ") + e.what());
  }
  c.validate();
  return c;
}

Json to_json(const PowerCase& c) {
  Json buses = Json::array(), lines = Json::array(), machines = Json::array();
  for (const auto& b : c.buses) {
    Json jb{{"id", b.id},
            {"type", b.type == BusType::generator ? "generator" : "load"},
            {"p_load", b.p_load},
            {"q_load", b.q_load},
            {"b_shunt", b.b_shunt}};
    if (b.type == BusType::generator) {
      jb["v_set"] = b.v_set;
      jb["p_set"] = b.p_set;
    }
    if (b.slack) jb["slack"] = true;
    buses.push_back(jb);
  }
  for (const auto& l : c.lines) {
    lines.push_back({{"from", l.from}, {"to", l.to}, {"r", l.r}, {"x", l.x},
                     {"b_half", l.b_half}, {"in_service", l.in_service}});
  }
  for (const auto& m : c.machines) {
    Json jm{{"bus", m.bus}, {"M", m.inertia}, {"D", m.damping}, {"xd_prime", m.xd_prime}};
    if (m.pm) jm["pm"] = *m.pm;
    if (m.eq_prime) jm["eq_prime"] = *m.eq_prime;
    machines.push_back(jm);
  }
  return {{"name", c.name}, {"base_mva", c.base_mva}, {"frequency_hz", c.frequency_hz},
          {"buses", buses}, {"lines", lines}, {"machines", machines}};
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("cannot parse '" + path + "': " + e.what());
  }
}

PowerCase load_case(const std::string& path) { return case_from_json(read_json_file(path)); }

std::vector<Contingency> contingencies_from_json(const Json& j) {
  if (!j.is_array()) throw InputError("contingency file must hold an array");
  std::vector<Contingency> out;
  std::set<int> ids;
  try {
    for (const auto& jc : j) {
      Contingency c{jc.at("id").get<int>(), jc.value("fault_bus", 0), jc.at("from").get<int>(),
                    jc.at("to").get<int>()};
      if (!ids.insert(c.id).second) {
        throw InputError("duplicate contingency id " + std::to_string(c.id));
      }
      out.push_back(c);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed contingency list: ") + e.what());
  }
  return out;
}

Json to_json(const std::vector<Contingency>& list) {
  Json arr = Json::array();
  for (const auto& c : list) {
    arr.push_back({{"id", c.id}, {"fault_bus", c.fault_bus}, {"from", c.from}, {"to", c.to}});
  }
  return arr;
}

std::vector<Contingency> load_contingencies(const std::string& path) {
  return contingencies_from_json(read_json_file(path));
}

const Contingency& find_contingency(const std::vector<Contingency>& list, int id) {
  for (const auto& c : list) {
    if (c.id == id) return c;
  }
  throw InputError("contingency id " + std::to_string(id) + " not found");
}

}  // namespace uep::power
