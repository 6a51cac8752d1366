#pragma once

#include "uep/types.hpp"

#include <functional>
#include <optional>
#include <string>

namespace uep {

enum class FdScheme { forward, central };

struct FdConfig {
  /// Relative perturbation; the step for coordinate j is perturbation * max(1, |x_j|).
  double perturbation = 1.4901161193847656e-08;  // sqrt(machine epsilon)
  FdScheme scheme = FdScheme::forward;

  void validate() const;
  static FdConfig central() { return FdConfig{1.4901161193847656e-08, FdScheme::central}; }
};

/// Square nonlinear system F: R^n -> R^n with an optional analytic Jacobian.
///
/// Instances are immutable; copies share nothing mutable and may be evaluated
/// concurrently.
class NonlinearSystem {
public:
  using ResidualFn = std::function<Vector(const Vector&)>;
  using JacobianFn = std::function<Matrix(const Vector&)>;

  NonlinearSystem(std::string name, Index dimension, ResidualFn residual,
                  std::optional<JacobianFn> jacobian = std::nullopt);

  const std::string& name() const { return name_; }
  Index dimension() const { return dimension_; }
  bool has_analytic_jacobian() const { return jacobian_.has_value(); }

  /// F(x). Throws InputError on dimension mismatch, EvaluationError on non-finite output.
  Vector residual(const Vector& x) const;

  /// DF(x): the analytic Jacobian when supplied, otherwise finite differences with `fd`.
  Matrix jacobian(const Vector& x, const FdConfig& fd = {}) const;

  /// Analytic Jacobian only; throws InputError when the system has none.
  Matrix analytic_jacobian(const Vector& x) const;

private:
  void check_input(const Vector& x) const;

  std::string name_;
  Index dimension_;
  ResidualFn residual_;
  std::optional<JacobianFn> jacobian_;
};

Vector eval_residual(const NonlinearSystem& sys, const Vector& x);

/// Finite-difference Jacobian of an arbitrary map g: R^n -> R^k evaluated at x.
/// `gx` is g(x), reused by the forward scheme.
Matrix fd_jacobian_of(const std::function<Vector(const Vector&)>& g, const Vector& x,
                      const Vector& gx, const FdConfig& cfg);

/// Column j approximates dF/dx_j. Central scheme has O(perturbation^2) truncation error.
Matrix fd_jacobian(const NonlinearSystem& sys, const Vector& x, const FdConfig& cfg = {});

}  // namespace uep
