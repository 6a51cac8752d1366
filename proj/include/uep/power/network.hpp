#pragma once

#include "uep/power/case.hpp"

#include <complex>
#include <vector>

namespace uep::power {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Raised when a network splits into more than one island.
class IslandError : public InputError {
public:
  IslandError(const std::string& what, std::vector<std::vector<int>> islands)
      : InputError(what), islands_(std::move(islands)) {}
  const std::vector<std::vector<int>>& islands() const { return islands_; }

private:
  std::vector<std::vector<int>> islands_;
};

/// Bus admittance matrix in bus order: series admittances 1/(r + jx), half
/// line charging and bus shunts on the diagonal. Out-of-service lines are skipped.
CMatrix build_ybus(const PowerCase& c);

/// Adds each load P + jQ as the shunt admittance (P - jQ)/|V|^2 at its bus.
CMatrix fold_constant_impedance_loads(const CMatrix& ybus, const PowerCase& c,
                                      const Vector& voltage_magnitudes);

/// Bus ids grouped by connectivity through in-service lines.
std::vector<std::vector<int>> islands(const PowerCase& c);

/// Copy of the case with the contingency's line out of service.
PowerCase apply_contingency(const PowerCase& c, const Contingency& k);

}  // namespace uep::power
