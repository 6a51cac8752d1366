#include "uep/qgs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

namespace uep {

QgsSystem::QgsSystem(NonlinearSystem base, FdConfig fd) : base_(std::move(base)), fd_(fd) {
  fd_.validate();
}

Vector QgsSystem::field(const Vector& x) const {
  const Vector f = base_.residual(x);
  const Matrix jac = base_.jacobian(x, fd_);
  return -(jac.transpose() * f);
}

Vector qgs_field(const QgsSystem& q, const Vector& x) { return q.field(x); }

Matrix qgs_jacobian_exact(const QgsSystem& q, const Vector& x, const FdConfig& cfg) {
  const Vector qx = q.field(x);
  return fd_jacobian_of([&q](const Vector& v) { return q.field(v); }, x, qx, cfg);
}

Matrix gram(const Matrix& jac) {
  Matrix g = Matrix::Zero(jac.cols(), jac.cols());
  g.selfadjointView<Eigen::Lower>().rankUpdate(jac.transpose());
  return g.selfadjointView<Eigen::Lower>();
}

Matrix qgs_jacobian_approx(const QgsSystem& q, const Vector& x) {
  return -gram(q.base().jacobian(x, q.fd()));
}

DefinitenessReport symmetric_definiteness(const Matrix& a) {
  DefinitenessReport report;
  const Index n = a.rows();
  report.largest_diagonal = a.diagonal().cwiseAbs().maxCoeff();
  report.singularity_threshold =
      static_cast<double>(n) * std::numeric_limits<double>::epsilon() * report.largest_diagonal;
  Eigen::LDLT<Matrix> ldlt(a);
  if (ldlt.info() != Eigen::Success) {
    report.smallest_pivot = -std::numeric_limits<double>::infinity();
    return report;
  }
  report.smallest_pivot = ldlt.vectorD().minCoeff();
  report.positive_definite = report.smallest_pivot > report.singularity_threshold;
  if (n <= 3) report.eigenvalues = small_symmetric_eigenvalues(a);
  return report;
}

DefinitenessReport verify_qgs_sep(const QgsSystem& q, const Vector& x, double tolerance) {
  const Vector f = q.base().residual(x);
  DefinitenessReport report = symmetric_definiteness(gram(q.base().jacobian(x, q.fd())));
  report.residual_norm = f.norm();
  report.not_at_equilibrium = report.residual_norm > tolerance;
  return report;
}

std::vector<double> small_symmetric_eigenvalues(const Matrix& a) {
  const Index n = a.rows();
  if (n == 1) return {a(0, 0)};
  if (n == 2) {
    // lambda^2 - tr lambda + det = 0
    const double tr = a(0, 0) + a(1, 1);
    const double half_gap = std::hypot(0.5 * (a(0, 0) - a(1, 1)), a(0, 1));
    return {0.5 * tr - half_gap, 0.5 * tr + half_gap};
  }
  if (n == 3) {
    // Trigonometric solution of the depressed characteristic cubic.
    const double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    const double mean = a.trace() / 3.0;
    if (p1 == 0.0) {
      std::vector<double> d{a(0, 0), a(1, 1), a(2, 2)};
      std::sort(d.begin(), d.end());
      return d;
    }
    const double p2 = (a(0, 0) - mean) * (a(0, 0) - mean) + (a(1, 1) - mean) * (a(1, 1) - mean) +
                      (a(2, 2) - mean) * (a(2, 2) - mean) + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    const Matrix b = (a - mean * Matrix::Identity(3, 3)) / p;
    const double r = std::clamp(0.5 * b.determinant(), -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double hi = mean + 2.0 * p * std::cos(phi);
    const double lo = mean + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
    const double mid = 3.0 * mean - hi - lo;
    return {lo, mid, hi};
  }
  return {};
}

}  // namespace uep
