#pragma once

#include "uep/nonlinear_system.hpp"
#include "uep/qgs.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace uep {

enum class StepRule { ser, step_norm };
enum class LinearStrategy { normal_equations, least_squares };
enum class SolverKind { nr, cnr, psitc_exact, qgs_psitc, hybrid };
enum class Status { converged, max_iterations, diverged, spurious_stationary, linear_solve_failure };
enum class SolutionType { type1, type2, type3, not_classified };

std::string_view to_string(StepRule r);
std::string_view to_string(LinearStrategy s);
std::string_view to_string(SolverKind k);
std::string_view to_string(Status s);
std::string_view to_string(SolutionType t);
StepRule parse_step_rule(std::string_view s);
LinearStrategy parse_linear_strategy(std::string_view s);
SolverKind parse_solver_kind(std::string_view s);
Status parse_status(std::string_view s);
SolutionType parse_solution_type(std::string_view s);

struct SolverConfig {
  double tolerance = 1e-6;  // on ||F||_2
  double h0 = 0.1;
  double h_max = std::numeric_limits<double>::infinity();
  int max_iterations = 100;
  StepRule step_rule = StepRule::ser;
  LinearStrategy linear_strategy = LinearStrategy::normal_equations;
  /// Bound on the relative inexactness of the pseudo-transient step. With direct
  /// factorizations it is informational only.
  double inexactness = 0.0;
  double cnr_step = 1.0;
  double hybrid_switch_threshold = 1e-2;
  int hybrid_newton_budget = 20;
  int stagnation_window = 5;
  /// NR and CNR (and the pseudo-transient solvers) stop as diverged when ||F||
  /// exceeds this multiple of its initial value.
  double divergence_factor = 1e6;
  /// Iterates with max-norm above this bound are diverged.
  double box_bound = std::numeric_limits<double>::infinity();
  /// DF when the system has no analytic Jacobian.
  FdConfig fd{};
  /// Assembly of the exact QGS Jacobian for psitc-exact.
  FdConfig dq_fd{};

  void validate() const;
};

struct TraceRecord {
  int iteration = 0;
  double residual_norm = 0.0;
  double h = 0.0;
};

struct HybridPhases {
  int newton = 0;
  int qgs_psitc = 0;
  int newton_finish = 0;
  /// 0 when the run converged, otherwise the phase (1, 2 or 3) whose failure ended it.
  int failed_phase = 0;
};

struct SolverResult {
  Status status = Status::max_iterations;
  Vector solution;
  double residual_norm = 0.0;
  int iterations = 0;
  SolutionType classification = SolutionType::not_classified;
  std::vector<TraceRecord> trace;
  double wall_time = 0.0;  // seconds, solver loop only
  std::optional<HybridPhases> hybrid;
  std::string message;

  bool converged() const { return status == Status::converged; }
};

/// Pseudo-time step controller. h stays in (0, h_max].
class StepController {
public:
  StepController(StepRule rule, double h0, double h_max, double initial_residual_norm);

  StepRule rule() const { return rule_; }
  double h() const { return h_; }
  double h_max() const { return h_max_; }
  double previous_residual_norm() const { return previous_; }

  /// Switched evolution relaxation: h <- min(h * prev / cur, h_max).
  /// `current_residual_norm` must be positive.
  void ser_update(double current_residual_norm);
  /// h <- min(h * ||step||, h_max). A zero step leaves h unchanged.
  void step_norm_update(double step_norm);
  void step_norm_update(const Vector& step) { step_norm_update(step.norm()); }

private:
  void set(double h);

  StepRule rule_;
  double h_;
  double h_max_;
  double previous_;
};

/// A vector field G with Jacobian DG for the steady-state problem x' = -G(x).
struct VectorField {
  Index dimension = 0;
  std::function<Vector(const Vector&)> value;
  std::function<Matrix(const Vector&)> jacobian;
};

/// Newton-Raphson: x <- x - DF(x)^{-1} F(x).
SolverResult newton_solve(const NonlinearSystem& sys, const Vector& x0, const SolverConfig& cfg);

/// Fixed-step RK4 integration of x' = -DF(x)^{-1} F(x); one RK4 step per iteration.
SolverResult continuous_newton_solve(const NonlinearSystem& sys, const Vector& x0,
                                     const SolverConfig& cfg);

/// Generic pseudo-transient continuation for x' = -G(x): solve
/// (h^{-1} I + DG(x)) s = -G(x), x <- x + s, update h. Stops when ||G|| <= tolerance.
SolverResult psitc_solve(const VectorField& field, const Vector& x0, const SolverConfig& cfg);

/// Pseudo-transient continuation on the QGS with the exact Jacobian
/// (Hessian term included, assembled by finite differences of the field).
/// Convergence is declared on ||F||, not on ||G||.
SolverResult psitc_exact_solve(const NonlinearSystem& base, const Vector& x0,
                               const SolverConfig& cfg);

/// Step of the QGS-based method: solves (h^{-1} I + J^T J) s = -J^T f by Cholesky
/// (normal equations) or min ||[J; h^{-1/2} I] s + [f; 0]|| by QR (least squares).
Vector qgs_psitc_step(const Matrix& jac, const Vector& f, double h, LinearStrategy strategy);
Vector qgs_psitc_step(const NonlinearSystem& base, const Vector& x, double h,
                      LinearStrategy strategy, const FdConfig& fd = {});

/// Pseudo-transient continuation on the QGS with the Jacobian approximated by
/// -J^T J. Converged results are always roots of F with nonsingular DF.
SolverResult qgs_psitc_solve(const NonlinearSystem& base, const Vector& x0,
                             const SolverConfig& cfg);

/// NR first; on failure restart with the QGS-based method from x0 until
/// ||F|| <= hybrid_switch_threshold, then finish with NR.
SolverResult hybrid_solve(const NonlinearSystem& base, const Vector& x0, const SolverConfig& cfg);

SolverResult solve(SolverKind kind, const NonlinearSystem& base, const Vector& x0,
                   const SolverConfig& cfg);

/// Root regularity: DF^T DF passes the pivot test, and a Newton step from x
/// contracts the residual at least tenfold (or ||F|| is already at roundoff level).
/// Fails at points that only approximate a singular root.
bool is_regular_root(const NonlinearSystem& base, const Vector& x, const FdConfig& fd = {});

/// Type of a QGS stationary point (||DF^T F|| <= tolerance). Returns not_classified
/// when x is not stationary.
SolutionType classify_solution(const NonlinearSystem& base, const Vector& x, double tolerance,
                               const FdConfig& fd = {});

}  // namespace uep
