#pragma once

#include "uep/types.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace uep::power {

using Json = nlohmann::json;

enum class BusType { generator, load };

struct Bus {
  int id = 0;
  BusType type = BusType::load;
  double p_load = 0.0;  // p.u.
  double q_load = 0.0;  // p.u.
  double b_shunt = 0.0; // p.u.
  /// Power-flow data for generator buses: voltage setpoint and scheduled active
  /// output (ignored at the slack bus).
  double v_set = 1.0;
  double p_set = 0.0;
  bool slack = false;
};

struct Line {
  int from = 0;
  int to = 0;
  double r = 0.0;
  double x = 0.0;
  double b_half = 0.0;  // half of the total line charging
  bool in_service = true;
};

struct Machine {
  int bus = 0;
  double inertia = 0.0;   // M in p.u.-s^2
  double damping = 0.0;   // D
  double xd_prime = 0.0;  // X'd
  std::optional<double> pm;
  std::optional<double> eq_prime;
};

struct PowerCase {
  std::string name;
  double base_mva = 100.0;
  double frequency_hz = 60.0;
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<Machine> machines;

  /// Position of a bus id in `buses`; throws InputError for unknown ids.
  Index bus_index(int id) const;
  Index slack_index() const;
  /// Structural checks: unique bus ids, references to existing buses, one machine
  /// per generator bus, positive M and X'd.
  void validate() const;
};

struct Contingency {
  int id = 0;
  int fault_bus = 0;  // metadata
  int from = 0;
  int to = 0;
};

/// Machines take either "M" or "H" (M = 2H / omega_s) and either "D" or
/// "damping_ratio" (D = ratio * M).
PowerCase case_from_json(const Json& j);
Json to_json(const PowerCase& c);
PowerCase load_case(const std::string& path);

std::vector<Contingency> contingencies_from_json(const Json& j);
Json to_json(const std::vector<Contingency>& list);
std::vector<Contingency> load_contingencies(const std::string& path);
const Contingency& find_contingency(const std::vector<Contingency>& list, int id);

/// Parses a JSON file; throws InputError naming the path when it cannot be read.
Json read_json_file(const std::string& path);

}  // namespace uep::power
