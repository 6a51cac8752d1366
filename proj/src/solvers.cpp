#include "uep/solvers.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <utility>

namespace uep {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

template <typename E, std::size_t N>
std::string_view enum_name(E value, const std::array<std::pair<E, std::string_view>, N>& table) {
  for (const auto& [e, name] : table) {
    if (e == value) return name;
  }
  return "unknown";
}

template <typename E, std::size_t N>
E enum_parse(std::string_view s, const std::array<std::pair<E, std::string_view>, N>& table,
             const char* what) {
  for (const auto& [e, name] : table) {
    if (name == s) return e;
  }
  throw InputError(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

constexpr std::array<std::pair<StepRule, std::string_view>, 3> kStepRules{{
    {StepRule::ser, "ser"}, {StepRule::step_norm, "step-norm"}, {StepRule::ser, "SER"}}};
constexpr std::array<std::pair<LinearStrategy, std::string_view>, 4> kStrategies{{
    {LinearStrategy::normal_equations, "normal"},
    {LinearStrategy::least_squares, "lsq"},
    {LinearStrategy::normal_equations, "normal-equations"},
    {LinearStrategy::least_squares, "least-squares"}}};
constexpr std::array<std::pair<SolverKind, std::string_view>, 5> kKinds{{
    {SolverKind::nr, "nr"},
    {SolverKind::cnr, "cnr"},
    {SolverKind::psitc_exact, "psitc-exact"},
    {SolverKind::qgs_psitc, "qgs-psitc"},
    {SolverKind::hybrid, "hybrid"}}};
constexpr std::array<std::pair<Status, std::string_view>, 5> kStatuses{{
    {Status::converged, "converged"},
    {Status::max_iterations, "max-iterations"},
    {Status::diverged, "diverged"},
    {Status::spurious_stationary, "spurious-stationary"},
    {Status::linear_solve_failure, "linear-solve-failure"}}};
constexpr std::array<std::pair<SolutionType, std::string_view>, 4> kTypes{{
    {SolutionType::type1, "type-1"},
    {SolutionType::type2, "type-2"},
    {SolutionType::type3, "type-3"},
    {SolutionType::not_classified, "not-classified"}}};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Solve a general square system by LU with a reciprocal-condition guard.
Vector lu_solve(const Matrix& a, const Vector& rhs, const char* what) {
  Eigen::PartialPivLU<Matrix> lu(a);
  const double rcond = lu.rcond();
  if (!(rcond > static_cast<double>(a.rows()) * kEps)) {
    throw LinearSolveError(std::string(what) + " is singular (rcond " + std::to_string(rcond) +
                           ")");
  }
  Vector s = lu.solve(rhs);
  if (!s.allFinite()) throw LinearSolveError(std::string(what) + " solve is not finite");
  return s;
}

bool outside_box(const Vector& x, const SolverConfig& cfg) {
  return std::isfinite(cfg.box_bound) && x.cwiseAbs().maxCoeff() > cfg.box_bound;
}

bool blew_up(double fnorm, double initial, const SolverConfig& cfg) {
  const double reference = std::max(initial, std::sqrt(std::numeric_limits<double>::min()));
  return !std::isfinite(fnorm) || fnorm > cfg.divergence_factor * reference;
}

/// Fills status-dependent fields shared by every solver.
SolverResult finish(const NonlinearSystem& base, Status status, Vector x, double fnorm,
                    int iterations, std::vector<TraceRecord> trace, Clock::time_point t0,
                    const SolverConfig& cfg, std::string message = {}) {
  SolverResult r;
  r.wall_time = seconds_since(t0);
  r.status = status;
  r.residual_norm = fnorm;
  r.iterations = iterations;
  r.trace = std::move(trace);
  r.message = std::move(message);
  if (status == Status::converged) {
    r.classification = SolutionType::type1;
  } else if (x.allFinite()) {
    try {
      r.classification = classify_solution(base, x, cfg.tolerance, cfg.fd);
    } catch (const std::exception&) {
      r.classification = SolutionType::not_classified;
    }
  }
  r.solution = std::move(x);
  return r;
}

/// Outcome at a point whose residual already meets the tolerance.
Status root_status(const NonlinearSystem& base, const Vector& x, const SolverConfig& cfg) {
  return is_regular_root(base, x, cfg.fd) ? Status::converged : Status::spurious_stationary;
}

Vector newton_direction(const NonlinearSystem& sys, const Vector& x, const Vector& f,
                        const SolverConfig& cfg) {
  return lu_solve(sys.jacobian(x, cfg.fd), -f, "Jacobian");
}

struct PsitcMode {
  bool exact_jacobian = false;
  bool check_root = true;
  double stop_tolerance = 0.0;
};

/// Pseudo-transient continuation on the QGS of `base` with ||F|| as the outer
/// criterion and stagnation detection for non-root stationary points.
SolverResult run_qgs_psitc(const NonlinearSystem& base, const Vector& x0, const SolverConfig& cfg,
                           const PsitcMode& mode) {
  cfg.validate();
  const auto t0 = Clock::now();
  const std::optional<QgsSystem> qgs =
      mode.exact_jacobian ? std::optional<QgsSystem>(QgsSystem(base, cfg.fd)) : std::nullopt;

  Vector x = x0;
  Vector f = base.residual(x);
  Matrix jac = base.jacobian(x, cfg.fd);
  Vector g = jac.transpose() * f;
  double fnorm = f.norm();
  double gnorm = g.norm();
  const double f0 = fnorm;
  StepController ctrl(cfg.step_rule, cfg.h0, cfg.h_max, gnorm);
  std::vector<TraceRecord> trace{{0, fnorm, ctrl.h()}};
  int stalled = 0;

  for (int it = 0;; ++it) {
    if (fnorm <= mode.stop_tolerance) {
      const Status s = mode.check_root ? root_status(base, x, cfg) : Status::converged;
      return finish(base, s, x, fnorm, it, std::move(trace), t0, cfg);
    }
    if (gnorm == 0.0) {
      return finish(base, Status::spurious_stationary, x, fnorm, it, std::move(trace), t0, cfg,
                    "QGS field vanished at a non-root");
    }
    if (it >= cfg.max_iterations) {
      if (gnorm <= cfg.tolerance) {
        return finish(base, Status::spurious_stationary, x, fnorm, it, std::move(trace), t0, cfg,
                      "iteration limit reached with the QGS field below tolerance at a non-root");
      }
      return finish(base, Status::max_iterations, x, fnorm, it, std::move(trace), t0, cfg);
    }

    Vector s;
    try {
      if (mode.exact_jacobian) {
        Matrix shifted = -qgs_jacobian_exact(*qgs, x, cfg.dq_fd);
        shifted.diagonal().array() += 1.0 / ctrl.h();
        s = lu_solve(shifted, -g, "shifted QGS Jacobian");
      } else {
        s = qgs_psitc_step(jac, f, ctrl.h(), cfg.linear_strategy);
      }
    } catch (const LinearSolveError& e) {
      return finish(base, Status::linear_solve_failure, x, fnorm, it, std::move(trace), t0, cfg,
                    e.what());
    } catch (const EvaluationError& e) {
      return finish(base, Status::diverged, x, fnorm, it, std::move(trace), t0, cfg, e.what());
    }

    x += s;
    const double previous_fnorm = fnorm;
    try {
      f = base.residual(x);
      jac = base.jacobian(x, cfg.fd);
    } catch (const EvaluationError& e) {
      trace.push_back({it + 1, std::numeric_limits<double>::quiet_NaN(), ctrl.h()});
      return finish(base, Status::diverged, x, std::numeric_limits<double>::quiet_NaN(), it + 1,
                    std::move(trace), t0, cfg, e.what());
    }
    g = jac.transpose() * f;
    fnorm = f.norm();
    gnorm = g.norm();

    if (cfg.step_rule == StepRule::ser) {
      if (gnorm > 0.0) ctrl.ser_update(gnorm);
    } else {
      ctrl.step_norm_update(s);
    }
    trace.push_back({it + 1, fnorm, ctrl.h()});

    if (blew_up(fnorm, f0, cfg) || outside_box(x, cfg)) {
      return finish(base, Status::diverged, x, fnorm, it + 1, std::move(trace), t0, cfg);
    }
    const bool stationary = gnorm <= cfg.tolerance && fnorm > mode.stop_tolerance &&
                            fnorm >= 0.5 * previous_fnorm;
    stalled = stationary ? stalled + 1 : 0;
    if (stalled >= cfg.stagnation_window) {
      return finish(base, Status::spurious_stationary, x, fnorm, it + 1, std::move(trace), t0,
                    cfg, "QGS field stalled while the residual stayed large");
    }
  }
}

}  // namespace

std::string_view to_string(StepRule r) { return enum_name(r, kStepRules); }
std::string_view to_string(LinearStrategy s) { return enum_name(s, kStrategies); }
std::string_view to_string(SolverKind k) { return enum_name(k, kKinds); }
std::string_view to_string(Status s) { return enum_name(s, kStatuses); }
std::string_view to_string(SolutionType t) { return enum_name(t, kTypes); }
StepRule parse_step_rule(std::string_view s) { return enum_parse(s, kStepRules, "step rule"); }
LinearStrategy parse_linear_strategy(std::string_view s) {
  return enum_parse(s, kStrategies, "linear strategy");
}
SolverKind parse_solver_kind(std::string_view s) { return enum_parse(s, kKinds, "solver"); }
Status parse_status(std::string_view s) { return enum_parse(s, kStatuses, "status"); }
SolutionType parse_solution_type(std::string_view s) {
  return enum_parse(s, kTypes, "solution type");
}

void SolverConfig::validate() const {
  if (!(tolerance > 0.0)) throw InputError("tolerance must be positive");
  if (!(h0 > 0.0) || !std::isfinite(h0)) throw InputError("h0 must be positive and finite");
  if (!(h_max >= h0)) throw InputError("h_max must be >= h0");
  if (max_iterations < 0) throw InputError("max_iterations must be non-negative");
  if (!(inexactness >= 0.0)) throw InputError("inexactness must be non-negative");
  if (!(cnr_step > 0.0)) throw InputError("cnr_step must be positive");
  if (!(hybrid_switch_threshold >= tolerance)) {
    throw InputError("hybrid_switch_threshold must be >= tolerance");
  }
  if (hybrid_newton_budget <= 0) throw InputError("hybrid_newton_budget must be positive");
  if (stagnation_window <= 0) throw InputError("stagnation_window must be positive");
  if (!(divergence_factor > 1.0)) throw InputError("divergence_factor must exceed 1");
  if (!(box_bound > 0.0)) throw InputError("box_bound must be positive");
  fd.validate();
  dq_fd.validate();
}

bool is_regular_root(const NonlinearSystem& base, const Vector& x, const FdConfig& fd) {
  const Vector f = base.residual(x);
  const Matrix jac = base.jacobian(x, fd);
  const Matrix normal = gram(jac);
  if (!symmetric_definiteness(normal).positive_definite) return false;
  const double fnorm = f.norm();
  const double scale =
      std::max(1.0, jac.cwiseAbs().maxCoeff() * std::max(1.0, x.cwiseAbs().maxCoeff()));
  const double roundoff = 1e3 * kEps * scale;
  if (fnorm <= roundoff) return true;
  const Vector step = normal.ldlt().solve(-(jac.transpose() * f));
  try {
    const double next = base.residual(x + step).norm();
    return next <= std::max(roundoff, 0.1 * fnorm);
  } catch (const EvaluationError&) {
    return false;
  }
}

SolutionType classify_solution(const NonlinearSystem& base, const Vector& x, double tolerance,
                               const FdConfig& fd) {
  const Vector f = base.residual(x);
  const Matrix jac = base.jacobian(x, fd);
  if ((jac.transpose() * f).norm() > tolerance) return SolutionType::not_classified;
  if (f.norm() > tolerance) return SolutionType::type2;
  return is_regular_root(base, x, fd) ? SolutionType::type1 : SolutionType::type3;
}

SolverResult newton_solve(const NonlinearSystem& sys, const Vector& x0, const SolverConfig& cfg) {
  cfg.validate();
  const auto t0 = Clock::now();
  Vector x = x0;
  Vector f = sys.residual(x);
  double fnorm = f.norm();
  const double f0 = fnorm;
  std::vector<TraceRecord> trace{{0, fnorm, 1.0}};

  for (int it = 0;; ++it) {
    if (fnorm <= cfg.tolerance) {
      return finish(sys, root_status(sys, x, cfg), x, fnorm, it, std::move(trace), t0, cfg);
    }
    if (it >= cfg.max_iterations) {
      return finish(sys, Status::max_iterations, x, fnorm, it, std::move(trace), t0, cfg);
    }
    try {
      x += newton_direction(sys, x, f, cfg);
    } catch (const LinearSolveError& e) {
      return finish(sys, Status::linear_solve_failure, x, fnorm, it, std::move(trace), t0, cfg,
                    e.what());
    } catch (const EvaluationError& e) {
      return finish(sys, Status::diverged, x, fnorm, it, std::move(trace), t0, cfg, e.what());
    }
    try {
      f = sys.residual(x);
    } catch (const EvaluationError& e) {
      trace.push_back({it + 1, std::numeric_limits<double>::quiet_NaN(), 1.0});
      return finish(sys, Status::diverged, x, std::numeric_limits<double>::quiet_NaN(), it + 1,
                    std::move(trace), t0, cfg, e.what());
    }
    fnorm = f.norm();
    trace.push_back({it + 1, fnorm, 1.0});
    if (blew_up(fnorm, f0, cfg) || outside_box(x, cfg)) {
      return finish(sys, Status::diverged, x, fnorm, it + 1, std::move(trace), t0, cfg);
    }
  }
}

SolverResult continuous_newton_solve(const NonlinearSystem& sys, const Vector& x0,
                                     const SolverConfig& cfg) {
  cfg.validate();
  const auto t0 = Clock::now();
  const double tau = cfg.cnr_step;
  Vector x = x0;
  Vector f = sys.residual(x);
  double fnorm = f.norm();
  const double f0 = fnorm;
  std::vector<TraceRecord> trace{{0, fnorm, tau}};
  const auto direction = [&](const Vector& y) {
    return newton_direction(sys, y, sys.residual(y), cfg);
  };

  for (int it = 0;; ++it) {
    if (fnorm <= cfg.tolerance) {
      return finish(sys, root_status(sys, x, cfg), x, fnorm, it, std::move(trace), t0, cfg);
    }
    if (it >= cfg.max_iterations) {
      return finish(sys, Status::max_iterations, x, fnorm, it, std::move(trace), t0, cfg);
    }
    try {
      const Vector k1 = newton_direction(sys, x, f, cfg);
      const Vector k2 = direction(x + 0.5 * tau * k1);
      const Vector k3 = direction(x + 0.5 * tau * k2);
      const Vector k4 = direction(x + tau * k3);
      x += (tau / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    } catch (const LinearSolveError& e) {
      return finish(sys, Status::linear_solve_failure, x, fnorm, it, std::move(trace), t0, cfg,
                    e.what());
    } catch (const EvaluationError& e) {
      return finish(sys, Status::diverged, x, fnorm, it, std::move(trace), t0, cfg, e.what());
    }
    try {
      f = sys.residual(x);
    } catch (const EvaluationError& e) {
      trace.push_back({it + 1, std::numeric_limits<double>::quiet_NaN(), tau});
      return finish(sys, Status::diverged, x, std::numeric_limits<double>::quiet_NaN(), it + 1,
                    std::move(trace), t0, cfg, e.what());
    }
    fnorm = f.norm();
    trace.push_back({it + 1, fnorm, tau});
    if (blew_up(fnorm, f0, cfg) || outside_box(x, cfg)) {
      return finish(sys, Status::diverged, x, fnorm, it + 1, std::move(trace), t0, cfg);
    }
  }
}

SolverResult psitc_solve(const VectorField& field, const Vector& x0, const SolverConfig& cfg) {
  cfg.validate();
  if (field.dimension <= 0 || !field.value || !field.jacobian) {
    throw InputError("vector field needs a dimension, a value map and a Jacobian");
  }
  if (x0.size() != field.dimension) throw InputError("initial point has wrong dimension");
  const auto t0 = Clock::now();
  const Index n = field.dimension;

  const auto evaluate = [&](const Vector& y) {
    Vector v = field.value(y);
    if (v.size() != n || !v.allFinite()) throw EvaluationError("vector field is not finite");
    return v;
  };
  // Field-only results carry no base system; classification stays not_classified.
  const auto done = [&](Status status, Vector x, double gnorm, int it,
                        std::vector<TraceRecord> trace, std::string message = {}) {
    SolverResult r;
    r.wall_time = seconds_since(t0);
    r.status = status;
    r.solution = std::move(x);
    r.residual_norm = gnorm;
    r.iterations = it;
    r.trace = std::move(trace);
    r.message = std::move(message);
    return r;
  };

  Vector x = x0;
  Vector g = evaluate(x);
  double gnorm = g.norm();
  const double g0 = gnorm;
  StepController ctrl(cfg.step_rule, cfg.h0, cfg.h_max, gnorm);
  std::vector<TraceRecord> trace{{0, gnorm, ctrl.h()}};

  for (int it = 0;; ++it) {
    if (gnorm <= cfg.tolerance) return done(Status::converged, x, gnorm, it, std::move(trace));
    if (it >= cfg.max_iterations) {
      return done(Status::max_iterations, x, gnorm, it, std::move(trace));
    }
    Vector s;
    try {
      Matrix shifted = field.jacobian(x);
      if (shifted.rows() != n || shifted.cols() != n || !shifted.allFinite()) {
        throw EvaluationError("field Jacobian is not finite or has the wrong shape");
      }
      shifted.diagonal().array() += 1.0 / ctrl.h();
      s = lu_solve(shifted, -g, "shifted field Jacobian");
    } catch (const LinearSolveError& e) {
      return done(Status::linear_solve_failure, x, gnorm, it, std::move(trace), e.what());
    } catch (const EvaluationError& e) {
      return done(Status::diverged, x, gnorm, it, std::move(trace), e.what());
    }
    x += s;
    try {
      g = evaluate(x);
    } catch (const EvaluationError& e) {
      return done(Status::diverged, x, std::numeric_limits<double>::quiet_NaN(), it + 1,
                  std::move(trace), e.what());
    }
    gnorm = g.norm();
    if (cfg.step_rule == StepRule::ser) {
      if (gnorm > 0.0) ctrl.ser_update(gnorm);
    } else {
      ctrl.step_norm_update(s);
    }
    trace.push_back({it + 1, gnorm, ctrl.h()});
    if (blew_up(gnorm, g0, cfg) || outside_box(x, cfg)) {
      return done(Status::diverged, x, gnorm, it + 1, std::move(trace));
    }
  }
}

SolverResult psitc_exact_solve(const NonlinearSystem& base, const Vector& x0,
                               const SolverConfig& cfg) {
  return run_qgs_psitc(base, x0, cfg, {true, true, cfg.tolerance});
}

Vector qgs_psitc_step(const Matrix& jac, const Vector& f, double h, LinearStrategy strategy) {
  if (!(h > 0.0)) throw InputError("pseudo-time step must be positive");
  if (jac.rows() != f.size() || jac.cols() != jac.rows()) {
    throw InputError("Jacobian and residual shapes disagree");
  }
  if (!jac.allFinite() || !f.allFinite()) throw EvaluationError("non-finite step inputs");
  const Index n = jac.cols();
  const double shift = 1.0 / h;
  Vector s;
  if (strategy == LinearStrategy::normal_equations) {
    Matrix normal = gram(jac);
    normal.diagonal().array() += shift;
    Eigen::LLT<Matrix> llt(normal);
    if (llt.info() != Eigen::Success) {
      throw LinearSolveError("shifted normal matrix is not numerically positive definite");
    }
    s = llt.solve(-(jac.transpose() * f));
  } else {
    Matrix stacked(2 * n, n);
    stacked.topRows(n) = jac;
    stacked.bottomRows(n) = std::sqrt(shift) * Matrix::Identity(n, n);
    Vector rhs = Vector::Zero(2 * n);
    rhs.head(n) = -f;
    s = stacked.householderQr().solve(rhs);
  }
  if (!s.allFinite()) throw LinearSolveError("pseudo-transient step is not finite");
  return s;
}

Vector qgs_psitc_step(const NonlinearSystem& base, const Vector& x, double h,
                      LinearStrategy strategy, const FdConfig& fd) {
  return qgs_psitc_step(base.jacobian(x, fd), base.residual(x), h, strategy);
}

SolverResult qgs_psitc_solve(const NonlinearSystem& base, const Vector& x0,
                             const SolverConfig& cfg) {
  return run_qgs_psitc(base, x0, cfg, {false, true, cfg.tolerance});
}

SolverResult hybrid_solve(const NonlinearSystem& base, const Vector& x0, const SolverConfig& cfg) {
  cfg.validate();
  const auto t0 = Clock::now();
  HybridPhases phases;

  SolverConfig first = cfg;
  first.max_iterations = std::min(cfg.hybrid_newton_budget, cfg.max_iterations);
  SolverResult r1 = newton_solve(base, x0, first);
  phases.newton = r1.iterations;
  if (r1.converged()) {
    r1.hybrid = phases;
    r1.wall_time = seconds_since(t0);
    return r1;
  }

  std::vector<TraceRecord> trace = r1.trace;
  const auto append = [&trace](const std::vector<TraceRecord>& more, int offset) {
    for (std::size_t i = 1; i < more.size(); ++i) {
      TraceRecord rec = more[i];
      rec.iteration += offset;
      trace.push_back(rec);
    }
  };

  SolverResult r2 = run_qgs_psitc(base, x0, cfg, {false, false, cfg.hybrid_switch_threshold});
  phases.qgs_psitc = r2.iterations;
  append(r2.trace, phases.newton);
  if (!r2.converged()) {
    phases.failed_phase = 2;
    r2.iterations = phases.newton + phases.qgs_psitc;
    r2.trace = std::move(trace);
    r2.hybrid = phases;
    r2.wall_time = seconds_since(t0);
    r2.message = "hybrid: QGS-based restart failed (" + std::string(to_string(r2.status)) + ")" +
                 (r2.message.empty() ? "" : ": " + r2.message);
    return r2;
  }

  SolverResult r3 = newton_solve(base, r2.solution, cfg);
  phases.newton_finish = r3.iterations;
  append(r3.trace, phases.newton + phases.qgs_psitc);
  if (!r3.converged()) phases.failed_phase = 3;
  r3.iterations = phases.newton + phases.qgs_psitc + phases.newton_finish;
  r3.trace = std::move(trace);
  r3.hybrid = phases;
  r3.wall_time = seconds_since(t0);
  return r3;
}

SolverResult solve(SolverKind kind, const NonlinearSystem& base, const Vector& x0,
                   const SolverConfig& cfg) {
  switch (kind) {
    case SolverKind::nr: return newton_solve(base, x0, cfg);
    case SolverKind::cnr: return continuous_newton_solve(base, x0, cfg);
    case SolverKind::psitc_exact: return psitc_exact_solve(base, x0, cfg);
    case SolverKind::qgs_psitc: return qgs_psitc_solve(base, x0, cfg);
    case SolverKind::hybrid: return hybrid_solve(base, x0, cfg);
  }
  throw InputError("unknown solver kind");
}

}  // namespace uep
