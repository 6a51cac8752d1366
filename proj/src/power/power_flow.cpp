#include "uep/power/power_flow.hpp"

#include <cmath>

namespace uep::power {

CVector power_injections(const CMatrix& ybus, const Vector& v, const Vector& theta) {
  CVector u(v.size());
  for (Index i = 0; i < v.size(); ++i) u[i] = std::polar(v[i], theta[i]);
  const CVector current = ybus * u;
  return u.cwiseProduct(current.conjugate());
}

SepSolution power_flow_sep(const PowerCase& c, const PowerFlowOptions& opts) {
  c.validate();
  if (islands(c).size() > 1) throw InputError("case '" + c.name + "' is islanded");
  const CMatrix ybus = build_ybus(c);
  const Index m = static_cast<Index>(c.buses.size());
  const Index slack = c.slack_index();

  // Unknowns: angles of every non-slack bus, magnitudes of every load bus.
  std::vector<Index> angle_buses, magnitude_buses;
  CVector scheduled(m);
  Vector v(m), theta = Vector::Zero(m);
  for (Index i = 0; i < m; ++i) {
    const auto& b = c.buses[static_cast<std::size_t>(i)];
    const bool gen = b.type == BusType::generator;
    v[i] = gen ? b.v_set : 1.0;
    scheduled[i] = Complex((gen ? b.p_set : 0.0) - b.p_load, -b.q_load);
    if (i != slack) angle_buses.push_back(i);
    if (!gen) magnitude_buses.push_back(i);
  }
  const Index na = static_cast<Index>(angle_buses.size());
  const Index nv = static_cast<Index>(magnitude_buses.size());

  const auto mismatch = [&](const CVector& s) {
    Vector r(na + nv);
    for (Index a = 0; a < na; ++a) r[a] = (s[angle_buses[a]] - scheduled[angle_buses[a]]).real();
    for (Index k = 0; k < nv; ++k) {
      r[na + k] = (s[magnitude_buses[k]] - scheduled[magnitude_buses[k]]).imag();
    }
    return r;
  };

  SepSolution sep;
  CVector s = power_injections(ybus, v, theta);
  Vector r = mismatch(s);
  for (int it = 0;; ++it) {
    const double worst = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
    sep.mismatch_trace.push_back(worst);
    if (!std::isfinite(worst)) {
      throw PowerFlowError("power flow produced non-finite mismatches", sep.mismatch_trace);
    }
    if (worst <= opts.tolerance) {
      sep.iterations = it;
      sep.max_mismatch = worst;
      break;
    }
    if (it >= opts.max_iterations) {
      throw PowerFlowError("power flow did not converge in " + std::to_string(it) +
                               " iterations (mismatch " + std::to_string(worst) + ")",
                           sep.mismatch_trace);
    }
    // dS/dtheta and dS/d|V| in complex form.
    CVector u(m);
    for (Index i = 0; i < m; ++i) u[i] = std::polar(v[i], theta[i]);
    const CVector current = ybus * u;
    const CMatrix ds_dtheta =
        Complex(0.0, 1.0) * u.asDiagonal() * (current.asDiagonal().toDenseMatrix() - ybus * u.asDiagonal()).conjugate();
    CVector unit(m);
    for (Index i = 0; i < m; ++i) unit[i] = std::polar(1.0, theta[i]);
    const CMatrix ds_dv = u.asDiagonal() * (ybus * unit.asDiagonal()).conjugate() +
                          current.conjugate().asDiagonal() * unit.asDiagonal().toDenseMatrix();
    Matrix jac(na + nv, na + nv);
    for (Index a = 0; a < na; ++a) {
      for (Index b = 0; b < na; ++b) jac(a, b) = ds_dtheta(angle_buses[a], angle_buses[b]).real();
      for (Index k = 0; k < nv; ++k) jac(a, na + k) = ds_dv(angle_buses[a], magnitude_buses[k]).real();
    }
    for (Index q = 0; q < nv; ++q) {
      for (Index b = 0; b < na; ++b) {
        jac(na + q, b) = ds_dtheta(magnitude_buses[q], angle_buses[b]).imag();
      }
      for (Index k = 0; k < nv; ++k) {
        jac(na + q, na + k) = ds_dv(magnitude_buses[q], magnitude_buses[k]).imag();
      }
    }
    const Vector dx = jac.partialPivLu().solve(-r);
    for (Index a = 0; a < na; ++a) theta[angle_buses[a]] += dx[a];
    for (Index k = 0; k < nv; ++k) v[magnitude_buses[k]] += dx[na + k];
    s = power_injections(ybus, v, theta);
    r = mismatch(s);
  }

  const Index n = static_cast<Index>(c.machines.size());
  sep.v = v;
  sep.theta = theta;
  sep.p_gen.resize(n);
  sep.q_gen.resize(n);
  sep.eq_prime.resize(n);
  sep.delta.resize(n);
  sep.pm.resize(n);
  sep.inertia.resize(n);
  double total_inertia = 0.0, weighted_angle = 0.0;
  for (Index g = 0; g < n; ++g) {
    const auto& mach = c.machines[static_cast<std::size_t>(g)];
    const Index i = c.bus_index(mach.bus);
    const auto& b = c.buses[static_cast<std::size_t>(i)];
    const Complex gen = s[i] + Complex(b.p_load, b.q_load);
    const Complex terminal = std::polar(v[i], theta[i]);
    const Complex current = std::conj(gen / terminal);
    const Complex internal = terminal + Complex(0.0, mach.xd_prime) * current;
    sep.p_gen[g] = gen.real();
    sep.q_gen[g] = gen.imag();
    sep.eq_prime[g] = std::abs(internal);
    sep.delta[g] = std::arg(internal);
    sep.pm[g] = gen.real();
    sep.inertia[g] = mach.inertia;
    total_inertia += mach.inertia;
    weighted_angle += mach.inertia * sep.delta[g];
  }
  sep.delta_coi = weighted_angle / total_inertia;

  sep.state.resize((n - 1) + 2 * m);
  for (Index g = 1; g < n; ++g) sep.state[g - 1] = sep.delta[g] - sep.delta_coi;
  for (Index i = 0; i < m; ++i) {
    sep.state[(n - 1) + i] = theta[i] - sep.delta_coi;
    sep.state[(n - 1) + m + i] = v[i];
  }
  return sep;
}

}  // namespace uep::power
