#include "uep/nonlinear_system.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace uep {

void FdConfig::validate() const {
  if (!(perturbation > 0.0) || !std::isfinite(perturbation)) {
    throw InputError("finite-difference perturbation must be positive and finite");
  }
}

NonlinearSystem::NonlinearSystem(std::string name, Index dimension, ResidualFn residual,
                                 std::optional<JacobianFn> jacobian)
    : name_(std::move(name)),
      dimension_(dimension),
      residual_(std::move(residual)),
      jacobian_(std::move(jacobian)) {
  if (dimension_ <= 0) throw InputError("system dimension must be positive");
  if (!residual_) throw InputError("system '" + name_ + "' has no residual map");
  if (jacobian_ && !*jacobian_) jacobian_.reset();
}

void NonlinearSystem::check_input(const Vector& x) const {
  if (x.size() != dimension_) {
    throw InputError("system '" + name_ + "' expects dimension " + std::to_string(dimension_) +
                     ", got " + std::to_string(x.size()));
  }
}

Vector NonlinearSystem::residual(const Vector& x) const {
  check_input(x);
  Vector f = residual_(x);
  if (f.size() != dimension_) {
    throw InputError("system '" + name_ + "' residual returned wrong dimension");
  }
  if (!f.allFinite()) throw EvaluationError("system '" + name_ + "' residual is not finite");
  return f;
}

Matrix NonlinearSystem::analytic_jacobian(const Vector& x) const {
  check_input(x);
  if (!jacobian_) throw InputError("system '" + name_ + "' has no analytic Jacobian");
  Matrix j = (*jacobian_)(x);
  if (j.rows() != dimension_ || j.cols() != dimension_) {
    throw InputError("system '" + name_ + "' Jacobian returned wrong shape");
  }
  if (!j.allFinite()) throw EvaluationError("system '" + name_ + "' Jacobian is not finite");
  return j;
}

Matrix NonlinearSystem::jacobian(const Vector& x, const FdConfig& fd) const {
  if (jacobian_) return analytic_jacobian(x);
  return fd_jacobian(*this, x, fd);
}

Vector eval_residual(const NonlinearSystem& sys, const Vector& x) { return sys.residual(x); }

Matrix fd_jacobian_of(const std::function<Vector(const Vector&)>& g, const Vector& x,
                      const Vector& gx, const FdConfig& cfg) {
  cfg.validate();
  const Index n = x.size();
  Matrix jac(gx.size(), n);
  Vector xp = x;
  for (Index j = 0; j < n; ++j) {
    const double step = cfg.perturbation * std::max(1.0, std::abs(x[j]));
    if (cfg.scheme == FdScheme::forward) {
      xp[j] = x[j] + step;
      const double dx = xp[j] - x[j];  // exactly representable step
      jac.col(j) = (g(xp) - gx) / dx;
    } else {
      xp[j] = x[j] + step;
      const double up = xp[j];
      const Vector gp = g(xp);
      xp[j] = x[j] - step;
      const double down = xp[j];
      jac.col(j) = (gp - g(xp)) / (up - down);
    }
    xp[j] = x[j];
  }
  if (!jac.allFinite()) throw EvaluationError("finite-difference Jacobian is not finite");
  return jac;
}

Matrix fd_jacobian(const NonlinearSystem& sys, const Vector& x, const FdConfig& cfg) {
  const Vector fx = sys.residual(x);
  return fd_jacobian_of([&sys](const Vector& v) { return sys.residual(v); }, x, fx, cfg);
}

}  // namespace uep
