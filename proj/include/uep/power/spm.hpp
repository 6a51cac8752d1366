#pragma once

#include "uep/nonlinear_system.hpp"
#include "uep/power/power_flow.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace uep::power {

struct CoiQuantities {
  double delta0 = 0.0;
  double omega0 = 0.0;
  double total_inertia = 0.0;
  Vector delta_rel;
  Vector omega_rel;
};

/// Center-of-inertia aggregates and COI-relative angles and speeds.
CoiQuantities coi_quantities(const Vector& delta, const Vector& omega, const Vector& inertia);

/// Equilibrium equations of the structure-preserving classical-machine model in
/// the COI frame.
///
/// Unknowns, in order: reduced machine angles d~_2..d~_n (d~_1 follows from
/// sum M_i d~_i = 0), bus angles th~_1..th~_m, bus voltages V_1..V_m.
/// Residual, in order: swing mismatches of machines 2..n, then the real parts
/// and the imaginary parts of the m bus current balances. Loads are constant
/// impedances folded into the admittance matrix.
class SpmSystem {
public:
  SpmSystem(std::string name, CMatrix ybus, std::vector<Index> machine_bus, Vector inertia,
            Vector damping, Vector xd_prime, Vector eq_prime, Vector pm);

  const std::string& name() const { return name_; }
  Index machine_count() const { return inertia_.size(); }
  Index bus_count() const { return ybus_.rows(); }
  Index dimension() const { return (machine_count() - 1) + 2 * bus_count(); }

  Index angle_index(Index machine) const;  // machine >= 1
  Index theta_index(Index bus) const { return (machine_count() - 1) + bus; }
  Index voltage_index(Index bus) const { return (machine_count() - 1) + bus_count() + bus; }
  std::vector<std::string> variable_names() const;

  /// Network admittance with loads folded in (machines excluded).
  const CMatrix& ybus() const { return ybus_; }
  const std::vector<Index>& machine_bus() const { return machine_bus_; }
  const Vector& inertia() const { return inertia_; }
  const Vector& damping() const { return damping_; }
  const Vector& xd_prime() const { return xd_prime_; }
  const Vector& eq_prime() const { return eq_prime_; }
  const Vector& pm() const { return pm_; }
  double total_inertia() const { return inertia_.sum(); }

  /// All n COI-relative machine angles; the first is rebuilt from the COI constraint.
  Vector machine_angles(const Vector& x) const;
  /// The reduced angle coordinates d~_2..d~_n.
  Vector swept_coordinates(const Vector& x) const { return x.head(machine_count() - 1); }
  /// sum M_i d~_i
  double coi_residual(const Vector& x) const;
  /// Swing mismatches of all n machines, including the dropped reference one.
  Vector swing_mismatches(const Vector& x) const;
  /// Electrical output E' V sin(d - th) / X'd of each machine.
  Vector electrical_power(const Vector& x) const;

  Vector residual(const Vector& x) const;
  Matrix jacobian(const Vector& x) const;
  NonlinearSystem as_system() const;

  /// Bus voltage phasors solving the network equations with machine angles frozen.
  CVector network_voltages(const Vector& machine_angles) const;

private:
  void check(const Vector& x) const;
  CVector machine_sources(const Vector& machine_angles) const;

  std::string name_;
  CMatrix ybus_;
  CMatrix ybus_aug_;  // ybus_ plus 1/(j X'd) at machine buses
  Eigen::PartialPivLU<CMatrix> network_lu_;
  std::vector<Index> machine_bus_;
  Vector inertia_, damping_, xd_prime_, eq_prime_, pm_;
};

/// Post-fault structure-preserving system. Machine internals come from the case
/// when given, otherwise from `sep`; loads are folded at the SEP voltages.
/// Rejects cases whose damping-to-inertia ratio is not uniform.
SpmSystem assemble_spm(const PowerCase& c, const std::optional<Contingency>& contingency,
                       const SepSolution& sep);

Vector spm_residual(const SpmSystem& sys, const Vector& x);

struct InitialState {
  Vector state;
  bool resolved = false;
  std::string reason;
};

/// Full state for a point of the reduced angle space: d~_1 from the COI
/// constraint, (th~, V) from the network equations with the machine angles
/// frozen. Bus angles take the 2*pi branch nearest the anchor's. Points where a
/// bus voltage collapses below `min_voltage` are unresolvable.
InitialState grid_initial_state(const SpmSystem& sys, const Vector& angle_point,
                                const Vector& anchor_state, double min_voltage = 1e-2);
InitialState grid_initial_state(const SpmSystem& sys, const Vector& angle_point,
                                const SepSolution& anchor, double min_voltage = 1e-2);

}  // namespace uep::power
