#pragma once

#include "uep/nonlinear_system.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace uep::builtin {

/// F(x) = x, scalar.
NonlinearSystem identity();
/// F(x) = x^2 - 4, roots at +-2.
NonlinearSystem quadratic();
/// Equilibrium equations of the damped pendulum: F = (x2, -sin x1 - d x2).
/// Roots (k pi, 0); odd k are saddles of the pendulum dynamics.
NonlinearSystem pendulum(double damping = 0.1);
/// F(x, y) = (x, 1): every point of the line x = 0 is a QGS stationary point with F != 0.
NonlinearSystem type2();
/// F(x) = x^2: double root at 0 where DF is singular.
NonlinearSystem type3();
/// F_i(x) = c_i + sum_j A_ij x_j + B_ij x_j^2 with seeded coefficients.
NonlinearSystem random_polynomial(Index n, std::uint64_t seed);

/// Resolves "quadratic", "pendulum", "type2", "type3", "identity" and
/// "randpoly:<n>:<seed>". Throws InputError for unknown names.
NonlinearSystem by_name(const std::string& name);

std::vector<std::string> names();

}  // namespace uep::builtin
