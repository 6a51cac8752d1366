#include "uep/power/spm.hpp"

#include <cmath>
#include <numbers>

namespace uep::power {

namespace {
constexpr Complex kJ(0.0, 1.0);
}

CoiQuantities coi_quantities(const Vector& delta, const Vector& omega, const Vector& inertia) {
  if (delta.size() != inertia.size() || omega.size() != inertia.size()) {
    throw InputError("COI inputs must have equal length");
  }
  CoiQuantities q;
  q.total_inertia = inertia.sum();
  if (!(q.total_inertia > 0.0)) throw InputError("total inertia must be positive");
  q.delta0 = inertia.dot(delta) / q.total_inertia;
  q.omega0 = inertia.dot(omega) / q.total_inertia;
  q.delta_rel = delta.array() - q.delta0;
  q.omega_rel = omega.array() - q.omega0;
  return q;
}

SpmSystem::SpmSystem(std::string name, CMatrix ybus, std::vector<Index> machine_bus,
                     Vector inertia, Vector damping, Vector xd_prime, Vector eq_prime, Vector pm)
    : name_(std::move(name)),
      ybus_(std::move(ybus)),
      machine_bus_(std::move(machine_bus)),
      inertia_(std::move(inertia)),
      damping_(std::move(damping)),
      xd_prime_(std::move(xd_prime)),
      eq_prime_(std::move(eq_prime)),
      pm_(std::move(pm)) {
  const Index n = inertia_.size();
  if (n < 1) throw InputError("structure-preserving model needs at least one machine");
  if (ybus_.rows() != ybus_.cols() || ybus_.rows() < 1) throw InputError("bad admittance matrix");
  if (static_cast<Index>(machine_bus_.size()) != n || damping_.size() != n ||
      xd_prime_.size() != n || eq_prime_.size() != n || pm_.size() != n) {
    throw InputError("machine parameter lengths disagree");
  }
  ybus_aug_ = ybus_;
  for (Index g = 0; g < n; ++g) {
    if (machine_bus_[static_cast<std::size_t>(g)] < 0 ||
        machine_bus_[static_cast<std::size_t>(g)] >= ybus_.rows()) {
      throw InputError("machine bus index out of range");
    }
    if (!(inertia_[g] > 0.0) || !(xd_prime_[g] > 0.0)) {
      throw InputError("machine inertia and reactance must be positive");
    }
    const Index b = machine_bus_[static_cast<std::size_t>(g)];
    ybus_aug_(b, b) += 1.0 / Complex(0.0, xd_prime_[g]);
  }
  network_lu_.compute(ybus_aug_);
}

Index SpmSystem::angle_index(Index machine) const {
  if (machine < 1 || machine >= machine_count()) {
    throw InputError("reduced angles exist for machines 2..n only");
  }
  return machine - 1;
}

std::vector<std::string> SpmSystem::variable_names() const {
  std::vector<std::string> names;
  for (Index g = 1; g < machine_count(); ++g) names.push_back("delta_" + std::to_string(g + 1));
  for (Index b = 0; b < bus_count(); ++b) names.push_back("theta_" + std::to_string(b + 1));
  for (Index b = 0; b < bus_count(); ++b) names.push_back("V_" + std::to_string(b + 1));
  return names;
}

void SpmSystem::check(const Vector& x) const {
  if (x.size() != dimension()) {
    throw InputError("SPM state must have length " + std::to_string(dimension()));
  }
}

Vector SpmSystem::machine_angles(const Vector& x) const {
  const Index n = machine_count();
  Vector delta(n);
  double weighted = 0.0;
  for (Index g = 1; g < n; ++g) {
    delta[g] = x[g - 1];
    weighted += inertia_[g] * x[g - 1];
  }
  delta[0] = -weighted / inertia_[0];
  return delta;
}

double SpmSystem::coi_residual(const Vector& x) const {
  check(x);
  return inertia_.dot(machine_angles(x));
}

Vector SpmSystem::electrical_power(const Vector& x) const {
  check(x);
  const Vector delta = machine_angles(x);
  Vector pe(machine_count());
  for (Index g = 0; g < machine_count(); ++g) {
    const Index b = machine_bus_[static_cast<std::size_t>(g)];
    pe[g] = eq_prime_[g] * x[voltage_index(b)] * std::sin(delta[g] - x[theta_index(b)]) /
            xd_prime_[g];
  }
  return pe;
}

Vector SpmSystem::swing_mismatches(const Vector& x) const {
  const Vector pe = electrical_power(x);
  const double p_coi = pm_.sum() - pe.sum();
  return (pm_ - pe).array() - (inertia_.array() / total_inertia()) * p_coi;
}

CVector SpmSystem::machine_sources(const Vector& delta) const {
  CVector src = CVector::Zero(bus_count());
  for (Index g = 0; g < machine_count(); ++g) {
    src[machine_bus_[static_cast<std::size_t>(g)]] +=
        std::polar(eq_prime_[g], delta[g]) / Complex(0.0, xd_prime_[g]);
  }
  return src;
}

CVector SpmSystem::network_voltages(const Vector& machine_angles) const {
  if (machine_angles.size() != machine_count()) throw InputError("need one angle per machine");
  return network_lu_.solve(machine_sources(machine_angles));
}

Vector SpmSystem::residual(const Vector& x) const {
  check(x);
  const Index n = machine_count(), m = bus_count();
  Vector f(dimension());
  f.head(n - 1) = swing_mismatches(x).tail(n - 1);
  CVector u(m);
  for (Index b = 0; b < m; ++b) u[b] = std::polar(x[voltage_index(b)], x[theta_index(b)]);
  const CVector mismatch = machine_sources(machine_angles(x)) - ybus_aug_ * u;
  f.segment(n - 1, m) = mismatch.real();
  f.segment(n - 1 + m, m) = mismatch.imag();
  return f;
}

Matrix SpmSystem::jacobian(const Vector& x) const {
  check(x);
  const Index n = machine_count(), m = bus_count(), dim = dimension();
  const Vector delta = machine_angles(x);

  // d(full machine angle)/d(reduced angle): identity for machines >= 2, COI row for machine 1.
  Matrix angle_map = Matrix::Zero(n, n - 1);
  for (Index g = 1; g < n; ++g) {
    angle_map(g, g - 1) = 1.0;
    angle_map(0, g - 1) = -inertia_[g] / inertia_[0];
  }

  Matrix dpe = Matrix::Zero(n, dim);
  for (Index g = 0; g < n; ++g) {
    const Index b = machine_bus_[static_cast<std::size_t>(g)];
    const double v = x[voltage_index(b)];
    const double angle = delta[g] - x[theta_index(b)];
    const double sync = eq_prime_[g] * v * std::cos(angle) / xd_prime_[g];
    if (n > 1) dpe.row(g).head(n - 1) += sync * angle_map.row(g);
    dpe(g, theta_index(b)) -= sync;
    dpe(g, voltage_index(b)) += eq_prime_[g] * std::sin(angle) / xd_prime_[g];
  }

  Matrix jac = Matrix::Zero(dim, dim);
  const Eigen::RowVectorXd dpe_total = dpe.colwise().sum();
  for (Index g = 1; g < n; ++g) {
    jac.row(g - 1) = -dpe.row(g) + (inertia_[g] / total_inertia()) * dpe_total;
  }

  for (Index l = 0; l < m; ++l) {
    const Complex rotation = std::polar(1.0, x[theta_index(l)]);
    const Complex u = x[voltage_index(l)] * rotation;
    for (Index k = 0; k < m; ++k) {
      const Complex d_theta = -ybus_aug_(k, l) * kJ * u;
      const Complex d_v = -ybus_aug_(k, l) * rotation;
      jac(n - 1 + k, theta_index(l)) = d_theta.real();
      jac(n - 1 + m + k, theta_index(l)) = d_theta.imag();
      jac(n - 1 + k, voltage_index(l)) = d_v.real();
      jac(n - 1 + m + k, voltage_index(l)) = d_v.imag();
    }
  }
  for (Index g = 0; g < n; ++g) {
    const Index b = machine_bus_[static_cast<std::size_t>(g)];
    const Complex d_source = kJ * std::polar(eq_prime_[g], delta[g]) / Complex(0.0, xd_prime_[g]);
    for (Index j = 0; j + 1 < n; ++j) {
      const double w = angle_map(g, j);
      if (w == 0.0) continue;
      jac(n - 1 + b, j) += w * d_source.real();
      jac(n - 1 + m + b, j) += w * d_source.imag();
    }
  }
  return jac;
}

NonlinearSystem SpmSystem::as_system() const {
  auto shared = std::make_shared<const SpmSystem>(*this);
  return NonlinearSystem(
      name_, dimension(), [shared](const Vector& x) { return shared->residual(x); },
      [shared](const Vector& x) { return shared->jacobian(x); });
}

Vector spm_residual(const SpmSystem& sys, const Vector& x) { return sys.residual(x); }

SpmSystem assemble_spm(const PowerCase& c, const std::optional<Contingency>& contingency,
                       const SepSolution& sep) {
  c.validate();
  const Index n = static_cast<Index>(c.machines.size());
  if (sep.pm.size() != n || sep.v.size() != static_cast<Index>(c.buses.size())) {
    throw InputError("SEP solution does not match the case");
  }
  const double ratio0 = c.machines.front().damping / c.machines.front().inertia;
  for (const auto& mach : c.machines) {
    if (std::abs(mach.damping / mach.inertia - ratio0) > 1e-9) {
      throw InputError("damping-to-inertia ratio is not uniform across machines; the COI "
                       "reduction requires uniform damping");
    }
  }
  const PowerCase post = contingency ? apply_contingency(c, *contingency) : c;
  const CMatrix ybus = fold_constant_impedance_loads(build_ybus(post), post, sep.v);

  std::vector<Index> machine_bus;
  Vector inertia(n), damping(n), xd(n), eq(n), pm(n);
  for (Index g = 0; g < n; ++g) {
    const auto& mach = c.machines[static_cast<std::size_t>(g)];
    machine_bus.push_back(c.bus_index(mach.bus));
    inertia[g] = mach.inertia;
    damping[g] = mach.damping;
    xd[g] = mach.xd_prime;
    eq[g] = mach.eq_prime.value_or(sep.eq_prime[g]);
    pm[g] = mach.pm.value_or(sep.pm[g]);
  }
  return SpmSystem(post.name, ybus, std::move(machine_bus), inertia, damping, xd, eq, pm);
}

InitialState grid_initial_state(const SpmSystem& sys, const Vector& angle_point,
                                const Vector& anchor_state, double min_voltage) {
  const Index n = sys.machine_count(), m = sys.bus_count();
  if (angle_point.size() != n - 1) {
    throw InputError("angle point must have " + std::to_string(n - 1) + " entries");
  }
  if (anchor_state.size() != sys.dimension()) throw InputError("anchor state has wrong length");
  InitialState out;
  out.state = Vector::Zero(sys.dimension());
  out.state.head(n - 1) = angle_point;
  const CVector u = sys.network_voltages(sys.machine_angles(out.state));
  if (!u.allFinite()) {
    out.reason = "network solve is not finite";
    return out;
  }
  for (Index b = 0; b < m; ++b) {
    const double v = std::abs(u[b]);
    if (v < min_voltage) {
      out.reason = "bus " + std::to_string(b + 1) + " voltage collapses to " + std::to_string(v);
      return out;
    }
    const double anchor = anchor_state[sys.theta_index(b)];
    double theta = std::arg(u[b]);
    theta += 2.0 * std::numbers::pi * std::round((anchor - theta) / (2.0 * std::numbers::pi));
    out.state[sys.theta_index(b)] = theta;
    out.state[sys.voltage_index(b)] = v;
  }
  out.resolved = true;
  return out;
}

InitialState grid_initial_state(const SpmSystem& sys, const Vector& angle_point,
                                const SepSolution& anchor, double min_voltage) {
  return grid_initial_state(sys, angle_point, anchor.state, min_voltage);
}

}  // namespace uep::power
