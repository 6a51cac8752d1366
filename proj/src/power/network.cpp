#include "uep/power/network.hpp"

#include <algorithm>
#include <numeric>

namespace uep::power {

CMatrix build_ybus(const PowerCase& c) {
  const Index m = static_cast<Index>(c.buses.size());
  CMatrix y = CMatrix::Zero(m, m);
  for (const auto& l : c.lines) {
    if (!l.in_service) continue;
    if (l.r == 0.0 && l.x == 0.0) {
      throw InputError("zero-impedance line " + std::to_string(l.from) + "-" +
                       std::to_string(l.to));
    }
    const Index i = c.bus_index(l.from);
    const Index k = c.bus_index(l.to);
    const Complex series = 1.0 / Complex(l.r, l.x);
    const Complex charging(0.0, l.b_half);
    y(i, i) += series + charging;
    y(k, k) += series + charging;
    y(i, k) -= series;
    y(k, i) -= series;
  }
  for (Index i = 0; i < m; ++i) y(i, i) += Complex(0.0, c.buses[static_cast<std::size_t>(i)].b_shunt);
  return y;
}

CMatrix fold_constant_impedance_loads(const CMatrix& ybus, const PowerCase& c,
                                      const Vector& voltage_magnitudes) {
  const Index m = static_cast<Index>(c.buses.size());
  if (ybus.rows() != m || voltage_magnitudes.size() != m) {
    throw InputError("admittance matrix, case and voltages disagree in size");
  }
  CMatrix y = ybus;
  for (Index i = 0; i < m; ++i) {
    const auto& b = c.buses[static_cast<std::size_t>(i)];
    if (b.p_load == 0.0 && b.q_load == 0.0) continue;
    const double v = voltage_magnitudes[i];
    if (!(v >= 0.1)) {
      throw InputError("bus " + std::to_string(b.id) + " voltage " + std::to_string(v) +
                       " p.u. is too low to fold its load");
    }
    y(i, i) += Complex(b.p_load, -b.q_load) / (v * v);
  }
  return y;
}

std::vector<std::vector<int>> islands(const PowerCase& c) {
  const std::size_t m = c.buses.size();
  std::vector<std::size_t> parent(m);
  std::iota(parent.begin(), parent.end(), 0);
  const auto root = [&parent](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (const auto& l : c.lines) {
    if (!l.in_service) continue;
    parent[root(static_cast<std::size_t>(c.bus_index(l.from)))] =
        root(static_cast<std::size_t>(c.bus_index(l.to)));
  }
  std::vector<std::vector<int>> groups;
  std::vector<long> slot(m, -1);
  for (std::size_t i = 0; i < m; ++i) {
    const auto r = root(i);
    if (slot[r] < 0) {
      slot[r] = static_cast<long>(groups.size());
      groups.emplace_back();
    }
    groups[static_cast<std::size_t>(slot[r])].push_back(c.buses[i].id);
  }
  return groups;
}

PowerCase apply_contingency(const PowerCase& c, const Contingency& k) {
  PowerCase out = c;
  const auto it = std::find_if(out.lines.begin(), out.lines.end(), [&k](const Line& l) {
    return l.in_service && ((l.from == k.from && l.to == k.to) || (l.from == k.to && l.to == k.from));
  });
  if (it == out.lines.end()) {
    throw InputError("contingency " + std::to_string(k.id) + ": no in-service line " +
                     std::to_string(k.from) + "-" + std::to_string(k.to));
  }
  it->in_service = false;
  auto parts = islands(out);
  if (parts.size() > 1) {
    std::string report;
    for (const auto& part : parts) {
      report += " {";
      for (std::size_t i = 0; i < part.size(); ++i) {
        report += (i ? "," : "") + std::to_string(part[i]);
      }
      report += "}";
    }
    throw IslandError("contingency " + std::to_string(k.id) + " islands the network:" + report,
                      std::move(parts));
  }
  out.name = c.name + " / contingency " + std::to_string(k.id);
  return out;
}

}  // namespace uep::power
