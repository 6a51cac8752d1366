#include "uep/builtin_systems.hpp"
#include "uep/serialize.hpp"
#include "uep/solvers.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

using namespace uep;

namespace {

const double pi = std::numbers::pi;
const double inf = std::numeric_limits<double>::infinity();

Vector vec(std::initializer_list<double> v) {
  Vector x(static_cast<Index>(v.size()));
  Index i = 0;
  for (double d : v) x[i++] = d;
  return x;
}

SolverConfig budget(int iterations) {
  SolverConfig cfg;
  cfg.max_iterations = iterations;
  return cfg;
}

/// Limit point of x' = -DF^T F by explicit Euler with a small fixed step.
Vector gradient_flow_limit(const NonlinearSystem& sys, Vector x) {
  for (int k = 0; k < 400000; ++k) {
    Vector f = sys.residual(x);
    Vector g = sys.analytic_jacobian(x).transpose() * f;
    if (g.norm() < 1e-13) break;
    x -= 1e-2 * g;
  }
  return x;
}

}  // namespace

TEST(StepController, SerExamples) {
  StepController c(StepRule::ser, 0.1, inf, 2.0);
  c.ser_update(0.5);
  EXPECT_DOUBLE_EQ(c.h(), 0.4);

  StepController same(StepRule::ser, 0.1, inf, 1.0);
  same.ser_update(1.0);
  EXPECT_DOUBLE_EQ(same.h(), 0.1);

  StepController grow(StepRule::ser, 0.1, inf, 1.0);
  grow.ser_update(2.0);
  EXPECT_DOUBLE_EQ(grow.h(), 0.05);
}

TEST(StepController, SerCapAndBadInput) {
  StepController c(StepRule::ser, 0.1, 0.15, 2.0);
  c.ser_update(0.5);
  EXPECT_DOUBLE_EQ(c.h(), 0.15);
  EXPECT_THROW(c.ser_update(0.0), InputError);
}

TEST(StepController, StepNormExamples) {
  StepController a(StepRule::step_norm, 0.1, inf, 1.0);
  a.step_norm_update(1.0);
  EXPECT_DOUBLE_EQ(a.h(), 0.1);

  StepController b(StepRule::step_norm, 0.1, 0.15, 1.0);
  b.step_norm_update(2.0);
  EXPECT_DOUBLE_EQ(b.h(), 0.15);

  StepController c(StepRule::step_norm, 0.1, inf, 1.0);
  c.step_norm_update(0.5);
  EXPECT_DOUBLE_EQ(c.h(), 0.05);
  c.step_norm_update(0.0);
  EXPECT_DOUBLE_EQ(c.h(), 0.05);
}

TEST(SolverConfig, Validation) {
  SolverConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.h_max = 0.05;
  EXPECT_THROW(cfg.validate(), InputError);
  cfg = SolverConfig{};
  cfg.tolerance = 0.0;
  EXPECT_THROW(cfg.validate(), InputError);
  cfg = SolverConfig{};
  cfg.hybrid_switch_threshold = 1e-9;
  EXPECT_THROW(cfg.validate(), InputError);
}

TEST(Newton, LinearConvergesInOneIteration) {
  auto r = newton_solve(builtin::identity(), vec({5}), SolverConfig{});
  EXPECT_TRUE(r.converged());
  EXPECT_EQ(r.iterations, 1);
  EXPECT_EQ(r.solution[0], 0.0);
  EXPECT_EQ(r.classification, SolutionType::type1);
}

TEST(Newton, QuadraticIterates) {
  const double expect[] = {2.1666666666666667, 2.0064102564102564, 2.0000102400262145};
  for (int k = 1; k <= 3; ++k) {
    auto r = newton_solve(builtin::quadratic(), vec({3}), budget(k));
    EXPECT_NEAR(r.solution[0], expect[k - 1], 1e-15);
  }
  auto r = newton_solve(builtin::quadratic(), vec({3}), SolverConfig{});
  EXPECT_TRUE(r.converged());
  EXPECT_NEAR(r.solution[0], 2.0, 1e-9);
}

TEST(Newton, SingularJacobianIsLinearSolveFailure) {
  // F(0) = 0 already, but the root is singular.
  auto r = newton_solve(builtin::type3(), vec({0}), SolverConfig{});
  EXPECT_FALSE(r.converged());
  EXPECT_EQ(r.status, Status::spurious_stationary);
  auto s = newton_solve(builtin::pendulum(), vec({pi / 2, 0}), SolverConfig{});
  EXPECT_EQ(s.status, Status::linear_solve_failure);
}

TEST(Newton, BoxBoundDiverges) {
  SolverConfig cfg;
  cfg.box_bound = 10.0;
  // x - tan(x) from just off pi/2 throws the iterate far away.
  auto r = newton_solve(builtin::pendulum(), vec({pi / 2 + 1e-3, 0}), cfg);
  EXPECT_EQ(r.status, Status::diverged);
}

TEST(ContinuousNewton, OneRk4StepOnLinearMap) {
  auto r = continuous_newton_solve(builtin::identity(), vec({1}), budget(1));
  EXPECT_NEAR(r.solution[0], 0.375, 1e-15);
  EXPECT_EQ(r.iterations, 1);
  auto full = continuous_newton_solve(builtin::identity(), vec({1}), SolverConfig{});
  EXPECT_TRUE(full.converged());
  for (std::size_t i = 1; i < full.trace.size(); ++i)
    EXPECT_LT(full.trace[i].residual_norm, full.trace[i - 1].residual_norm);
}

TEST(ContinuousNewton, CloserToNewtonFlowThanEuler) {
  // Newton flow on x^2 - 4 keeps F(x(t)) = F(x0) e^{-t}: x(1) = sqrt(4 + 5/e).
  double exact = std::sqrt(4.0 + 5.0 / std::numbers::e);
  double rk4 = continuous_newton_solve(builtin::quadratic(), vec({3}), budget(1)).solution[0];
  double euler = newton_solve(builtin::quadratic(), vec({3}), budget(1)).solution[0];
  EXPECT_LT(std::abs(rk4 - exact), std::abs(euler - exact));
  auto r = continuous_newton_solve(builtin::quadratic(), vec({3}), SolverConfig{});
  EXPECT_TRUE(r.converged());
  EXPECT_NEAR(r.solution[0], 2.0, 1e-6);
}

TEST(Psitc, ScalarLinearField) {
  VectorField g{1, [](const Vector& x) { return x; },
                [](const Vector&) { return Matrix::Identity(1, 1); }};
  SolverConfig cfg = budget(1);
  cfg.h0 = 1.0;
  auto one = psitc_solve(g, vec({1}), cfg);
  EXPECT_DOUBLE_EQ(one.solution[0], 0.5);
  cfg.max_iterations = 100;
  auto r = psitc_solve(g, vec({1}), cfg);
  EXPECT_TRUE(r.converged());
  for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_GE(r.trace[i].h, r.trace[i - 1].h);
}

TEST(Psitc, PendulumMatchesGradientFlowOracle) {
  auto sys = builtin::pendulum();
  Vector limit = gradient_flow_limit(sys, vec({2.0, 0.5}));
  ASSERT_LT((limit - vec({pi, 0})).norm(), 1e-6);
  for (auto kind : {SolverKind::psitc_exact, SolverKind::qgs_psitc}) {
    auto r = solve(kind, sys, vec({2.0, 0.5}), SolverConfig{});
    EXPECT_TRUE(r.converged()) << to_string(kind);
    EXPECT_LE(r.residual_norm, 1e-6);
    EXPECT_LT((r.solution - limit).norm(), 1e-5) << to_string(kind);
    EXPECT_EQ(r.classification, SolutionType::type1);
  }
}

TEST(QgsPsitcStep, Examples) {
  EXPECT_DOUBLE_EQ(qgs_psitc_step(builtin::identity(), vec({1}), 1.0, LinearStrategy::normal_equations)[0], -0.5);
  EXPECT_NEAR(qgs_psitc_step(builtin::quadratic(), vec({3}), 0.1, LinearStrategy::normal_equations)[0],
              -30.0 / 46.0, 1e-14);
  EXPECT_NEAR(qgs_psitc_step(builtin::quadratic(), vec({3}), 0.1, LinearStrategy::least_squares)[0],
              -30.0 / 46.0, 1e-14);
}

TEST(QgsPsitcStep, StrategiesAgreeOnWellConditionedInput) {
  std::mt19937_64 rng(21);
  for (int k = 0; k < 200; ++k) {
    Matrix j = Matrix::Identity(5, 5) * 3.0 +
               Matrix::NullaryExpr(5, 5, [&] { return std::uniform_real_distribution<>(-1, 1)(rng); });
    Vector f = test::uniform_vector(rng, 5, -1, 1);
    double h = std::exp(std::uniform_real_distribution<>(-3, 3)(rng));
    Vector a = qgs_psitc_step(j, f, h, LinearStrategy::normal_equations);
    Vector b = qgs_psitc_step(j, f, h, LinearStrategy::least_squares);
    EXPECT_LE((a - b).norm(), 1e-10 * b.norm());
  }
}

TEST(QgsPsitcStep, SolvableForRankDeficientJacobians) {
  std::mt19937_64 rng(22);
  std::uniform_int_distribution<int> dim(1, 6);
  for (int k = 0; k < 1000; ++k) {
    Index n = dim(rng);
    Index rank = std::uniform_int_distribution<Index>(0, n)(rng);
    Matrix u = Matrix::NullaryExpr(n, std::max<Index>(rank, 1), [&] { return std::normal_distribution<>()(rng); });
    Matrix v = Matrix::NullaryExpr(std::max<Index>(rank, 1), n, [&] { return std::normal_distribution<>()(rng); });
    Matrix j = rank == 0 ? Matrix::Zero(n, n) : Matrix(u * v);
    Vector f = test::uniform_vector(rng, n, -10, 10);
    double h = std::exp(std::uniform_real_distribution<>(-8, 8)(rng));
    for (auto s : {LinearStrategy::normal_equations, LinearStrategy::least_squares}) {
      Vector step;
      ASSERT_NO_THROW(step = qgs_psitc_step(j, f, h, s));
      ASSERT_TRUE(step.allFinite());
      // Residual of (h^{-1} I + J^T J) s = -J^T f.
      Matrix a = Matrix::Identity(n, n) / h + j.transpose() * j;
      Vector rhs = -j.transpose() * f;
      EXPECT_LE((a * step - rhs).norm(), 1e-8 * (a.norm() * step.norm() + rhs.norm() + 1e-300));
    }
  }
}

TEST(QgsPsitc, QuadraticLocalRateIsSuperlinear) {
  SolverConfig cfg;
  cfg.tolerance = 1e-12;
  cfg.max_iterations = 200;
  auto sys = builtin::quadratic();
  auto r = qgs_psitc_solve(sys, vec({3}), cfg);
  ASSERT_TRUE(r.converged());
  std::vector<double> err;
  Vector x = vec({3});
  for (int k = 1; k <= r.iterations; ++k) {
    x = qgs_psitc_solve(sys, vec({3}), [&] { auto c = cfg; c.max_iterations = k; return c; }()).solution;
    err.push_back(std::abs(x[0] - 2.0));
  }
  ASSERT_GE(err.size(), 4u);
  std::size_t n = err.size();
  double r1 = err[n - 3] / err[n - 4], r2 = err[n - 2] / err[n - 3], r3 = err[n - 1] / err[n - 2];
  EXPECT_GT(r1, r2);
  EXPECT_GT(r2, r3);
  EXPECT_LT(r3, 0.1);
}

TEST(QgsPsitc, SerStepsGrowOnMonotoneRun) {
  auto r = qgs_psitc_solve(builtin::quadratic(), vec({3}), SolverConfig{});
  ASSERT_TRUE(r.converged());
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    ASSERT_LT(r.trace[i].residual_norm, r.trace[i - 1].residual_norm);
    EXPECT_GE(r.trace[i].h, r.trace[i - 1].h);
  }
  EXPECT_GT(r.trace.back().h, 1e3);
}

TEST(QgsPsitc, SerStepsRespectCap) {
  SolverConfig cfg;
  cfg.h_max = 0.5;
  auto r = qgs_psitc_solve(builtin::quadratic(), vec({3}), cfg);
  for (const auto& t : r.trace) EXPECT_LE(t.h, 0.5);
}

TEST(QgsPsitc, TypeTwoLocusIsSpurious) {
  for (double x : {0.3, -0.2, 1e-3}) {
    auto r = qgs_psitc_solve(builtin::type2(), vec({x, 0.0}), SolverConfig{});
    EXPECT_EQ(r.status, Status::spurious_stationary) << x;
  }
}

TEST(QgsPsitc, NeverConvergesOnTypeTwoOrThree) {
  std::mt19937_64 rng(31);
  for (int k = 0; k < 200; ++k) {
    auto a = qgs_psitc_solve(builtin::type2(), test::uniform_vector(rng, 2, -5, 5), SolverConfig{});
    EXPECT_FALSE(a.converged());
    auto b = qgs_psitc_solve(builtin::type3(), test::uniform_vector(rng, 1, -5, 5), SolverConfig{});
    EXPECT_FALSE(b.converged());
    // Slow starts near the double root run out of iterations with a large field.
    if (2.0 * std::pow(std::abs(b.solution[0]), 3) <= SolverConfig{}.tolerance)
      EXPECT_EQ(b.status, Status::spurious_stationary);
  }
}

TEST(QgsPsitc, ConvergedImpliesSmallResidual) {
  std::mt19937_64 rng(32);
  for (int k = 0; k < 100; ++k) {
    auto sys = builtin::random_polynomial(3, static_cast<std::uint64_t>(k));
    auto r = qgs_psitc_solve(sys, test::uniform_vector(rng, 3, -2, 2), SolverConfig{});
    if (r.converged()) {
      EXPECT_LE(sys.residual(r.solution).norm(), 1e-6);
      EXPECT_EQ(r.classification, SolutionType::type1);
    }
  }
}

TEST(QgsPsitc, StepNormRuleConverges) {
  SolverConfig cfg;
  cfg.step_rule = StepRule::step_norm;
  cfg.h0 = 1.0;
  // h is scaled by the step length, so the run has to finish while steps are long.
  auto r = qgs_psitc_solve(builtin::identity(), vec({1e4}), cfg);
  EXPECT_TRUE(r.converged());
  auto stalled = qgs_psitc_solve(builtin::identity(), vec({0.5}), cfg);
  EXPECT_FALSE(stalled.converged());
}

TEST(Hybrid, PassesThroughWhenNewtonSucceeds) {
  auto nr = newton_solve(builtin::quadratic(), vec({3}), SolverConfig{});
  auto hy = hybrid_solve(builtin::quadratic(), vec({3}), SolverConfig{});
  EXPECT_TRUE(hy.converged());
  EXPECT_EQ(hy.solution, nr.solution);
  EXPECT_EQ(hy.iterations, nr.iterations);
  ASSERT_TRUE(hy.hybrid.has_value());
  EXPECT_EQ(hy.hybrid->qgs_psitc, 0);
  EXPECT_EQ(hy.hybrid->newton_finish, 0);
}

TEST(Hybrid, RecoversWhereNewtonFails) {
  // NR on atan(x) overshoots without bound once |x0| > 1.3917.
  NonlinearSystem sys("atan", 1, [](const Vector& x) { return Vector(x.array().atan()); });
  for (double x0 : {-2.0, -1.5, 1.5, 1.8, 2.0}) {
    auto nr = newton_solve(sys, vec({x0}), SolverConfig{});
    EXPECT_FALSE(nr.converged()) << x0;
    auto hy = hybrid_solve(sys, vec({x0}), SolverConfig{});
    EXPECT_TRUE(hy.converged()) << x0;
    EXPECT_NEAR(hy.solution[0], 0.0, 1e-6);
    ASSERT_TRUE(hy.hybrid.has_value());
    EXPECT_GT(hy.hybrid->qgs_psitc, 0);
    EXPECT_EQ(hy.iterations, hy.hybrid->newton + hy.hybrid->qgs_psitc + hy.hybrid->newton_finish);
  }
}

TEST(Hybrid, ConvergesWheneverNewtonDoes) {
  std::mt19937_64 rng(41);
  auto sys = builtin::pendulum();
  for (int k = 0; k < 200; ++k) {
    Vector x0 = test::uniform_vector(rng, 2, -4, 4);
    if (newton_solve(sys, x0, SolverConfig{}).converged())
      EXPECT_TRUE(hybrid_solve(sys, x0, SolverConfig{}).converged());
  }
}

TEST(Classify, Examples) {
  EXPECT_EQ(classify_solution(builtin::identity(), vec({0}), 1e-6), SolutionType::type1);
  EXPECT_EQ(classify_solution(builtin::type2(), vec({0, 0.7}), 1e-6), SolutionType::type2);
  EXPECT_EQ(classify_solution(builtin::type3(), vec({0}), 1e-6), SolutionType::type3);
  EXPECT_EQ(classify_solution(builtin::quadratic(), vec({3}), 1e-6), SolutionType::not_classified);
}

TEST(Classify, NearSingularRootIsNotRegular) {
  EXPECT_FALSE(is_regular_root(builtin::type3(), vec({1e-4})));
  EXPECT_TRUE(is_regular_root(builtin::quadratic(), vec({2.0 + 1e-7})));
}

TEST(EnumStrings, RoundTrip) {
  for (auto k : {SolverKind::nr, SolverKind::cnr, SolverKind::psitc_exact, SolverKind::qgs_psitc, SolverKind::hybrid})
    EXPECT_EQ(parse_solver_kind(to_string(k)), k);
  for (auto s : {Status::converged, Status::max_iterations, Status::diverged, Status::spurious_stationary,
                 Status::linear_solve_failure})
    EXPECT_EQ(parse_status(to_string(s)), s);
  EXPECT_THROW(parse_solver_kind("fsolve"), InputError);
}

TEST(Serialize, ResultRoundTripIsLossless) {
  SolverConfig cfg;
  cfg.h_max = inf;
  auto r = hybrid_solve(builtin::pendulum(), vec({2.0, 0.5}), cfg);
  Json j = to_json(r);
  auto back = solver_result_from_json(Json::parse(j.dump()));
  EXPECT_EQ(back.solution, r.solution);
  EXPECT_EQ(back.status, r.status);
  EXPECT_EQ(back.iterations, r.iterations);
  EXPECT_EQ(back.trace.size(), r.trace.size());
  ASSERT_TRUE(back.hybrid.has_value());
  EXPECT_EQ(back.hybrid->newton, r.hybrid->newton);

  auto c = solver_config_from_json(Json::parse(to_json(cfg).dump()));
  EXPECT_TRUE(std::isinf(c.h_max));
  EXPECT_EQ(c.tolerance, cfg.tolerance);
}
