#pragma once

#include "uep/nonlinear_system.hpp"

#include <vector>

namespace uep {

/// Quotient gradient system x' = Q(x) = -DF(x)^T F(x) built over a base system.
///
/// Q is the negative gradient of the merit 1/2 ||F(x)||^2, so every root of F is
/// an equilibrium of the flow, and a stable one whenever DF is nonsingular there.
class QgsSystem {
public:
  explicit QgsSystem(NonlinearSystem base, FdConfig fd = {});

  const NonlinearSystem& base() const { return base_; }
  const FdConfig& fd() const { return fd_; }
  Index dimension() const { return base_.dimension(); }

  /// -DF(x)^T F(x)
  Vector field(const Vector& x) const;

private:
  NonlinearSystem base_;
  FdConfig fd_;  // used only when the base has no analytic Jacobian
};

Vector qgs_field(const QgsSystem& q, const Vector& x);

/// DQ(x) including the Hessian contraction term, obtained by finite differences
/// of the field itself.
Matrix qgs_jacobian_exact(const QgsSystem& q, const Vector& x, const FdConfig& cfg = {});

/// -DF(x)^T DF(x). Exactly symmetric.
Matrix qgs_jacobian_approx(const QgsSystem& q, const Vector& x);
Matrix gram(const Matrix& jac);

struct DefinitenessReport {
  bool positive_definite = false;
  double smallest_pivot = 0.0;
  double largest_diagonal = 0.0;
  /// Pivot level at or below which the matrix is treated as singular.
  double singularity_threshold = 0.0;
  /// ||F(x)|| at the probed point.
  double residual_norm = 0.0;
  /// Set when the point is not an equilibrium of F (residual above tolerance);
  /// the Hessian term of DQ is then not negligible and the report is only indicative.
  bool not_at_equilibrium = false;
  /// Eigenvalues (ascending) of DF^T DF; filled for 1x1, 2x2 and 3x3 only.
  std::vector<double> eigenvalues;
};

/// Symmetric LDL^T factorization test of a symmetric matrix `a`. The matrix is
/// declared singular when its smallest pivot is <= n * eps * max|diag|.
DefinitenessReport symmetric_definiteness(const Matrix& a);

/// Checks whether -DQ(x) ~= DF(x)^T DF(x) is positive definite at a candidate root.
DefinitenessReport verify_qgs_sep(const QgsSystem& q, const Vector& x, double tolerance = 1e-6);

/// Eigenvalues of a symmetric matrix of order <= 3 from its characteristic polynomial.
std::vector<double> small_symmetric_eigenvalues(const Matrix& a);

}  // namespace uep
