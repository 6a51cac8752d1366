// Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero if a criterion fails
// that is not listed in kUnattainable.

#include "uep/builtin_systems.hpp"
#include "uep/power/case.hpp"
#include "uep/power/power_flow.hpp"
#include "uep/power/spm.hpp"
#include "uep/qgs.hpp"
#include "uep/region/region_map.hpp"
#include "uep/serialize.hpp"
#include "uep/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

using namespace uep;

namespace {

// Pinned tolerances.
constexpr double kGradientRelTol = 1e-5;
constexpr double kGradientSeconds = 5.0;
constexpr double kEigenTol = 1e-3;
constexpr double kPendulumEigLow = 0.9049;
constexpr double kPendulumEigHigh = 1.1051;
constexpr double kNonConvergenceSeconds = 30.0;
constexpr double kStrategyRelTol = 1e-10;
constexpr double kWellConditioned = 1e4;  // cond_2(h^{-1} I + J^T J)
constexpr double kNewtonRatioBound = 1.0;  // e_{k+1} / e_k^2
constexpr double kQgsFinalRatio = 0.1;
constexpr double kPendulumSeconds = 120.0;
constexpr double kMismatchTol = 1e-8;
constexpr double kRootTol = 1e-6;
constexpr double kNrItersLow = 2.0, kNrItersHigh = 8.0;
constexpr double kQgsItersLow = 5.0, kQgsItersHigh = 20.0;
constexpr double kWsccSeconds = 60.0;
constexpr double kSpeedupFloor = 3.0;
constexpr int kTimingRepeats = 7;

// Criteria that cannot pass as stated. They still print FAIL.
// 7: on the pendulum NR solves the omega row exactly in one step and then iterates
// delta <- delta - tan(delta) for every omega, so its target set is a union of whole
// grid columns. Here that is one band, its outside-connected fraction is exactly 0,
// and no solver can be strictly below it.
const std::vector<int> kUnattainable{7};

const double pi = std::numbers::pi;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass;
  std::string detail;
};
std::map<int, Verdict> verdicts;

void report(int id, bool pass, const std::string& detail) { verdicts[id] = {pass, detail}; }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Vector uniform(std::mt19937_64& rng, Index n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

void gradient_structure() {
  auto t0 = Clock::now();
  std::vector<NonlinearSystem> systems;
  for (const auto& name : builtin::names()) systems.push_back(builtin::by_name(name));
  systems.push_back(builtin::random_polynomial(3, 1));
  systems.push_back(builtin::random_polynomial(5, 2));
  std::mt19937_64 rng(1);
  double worst = 0.0;
  const int points = 200;
  for (int k = 0; k < points; ++k) {
    const auto& sys = systems[static_cast<std::size_t>(k) % systems.size()];
    Vector x = uniform(rng, sys.dimension(), -2.0, 2.0);
    QgsSystem q(sys);
    Vector field = qgs_field(q, x);
    Vector grad(x.size());
    auto central = [&](Index j, double h) {
      Vector xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      return (0.5 * sys.residual(xp).squaredNorm() - 0.5 * sys.residual(xm).squaredNorm()) / (2 * h);
    };
    // Richardson-extrapolated central differences.
    for (Index j = 0; j < x.size(); ++j) {
      double h = 1e-3 * std::max(1.0, std::abs(x[j]));
      grad[j] = (4.0 * central(j, 0.5 * h) - central(j, h)) / 3.0;
    }
    double rel = (field + grad).norm() / std::max(field.norm(), 1e-12);
    worst = std::max(worst, rel);
  }
  double t = seconds_since(t0);
  report(1, worst <= kGradientRelTol && t < kGradientSeconds,
         fmt("gradient structure on %d points, worst relative error %.2e (<= %.0e), %.2f s (< %.0f s)",
             points, worst, kGradientRelTol, t, kGradientSeconds));
}

void non_convergence() {
  auto t0 = Clock::now();
  std::mt19937_64 rng(3);
  int converged = 0, near_stationary = 0, mislabeled = 0, runs = 0;
  for (const auto& sys : {builtin::type2(), builtin::type3()}) {
    for (int k = 0; k < 1000; ++k) {
      SolverConfig cfg;
      auto r = qgs_psitc_solve(sys, uniform(rng, sys.dimension(), -5.0, 5.0), cfg);
      ++runs;
      if (r.converged()) ++converged;
      Vector g = sys.analytic_jacobian(r.solution).transpose() * sys.residual(r.solution);
      if (g.norm() <= cfg.tolerance) {
        ++near_stationary;
        if (r.status != Status::spurious_stationary) ++mislabeled;
      }
    }
  }
  double t = seconds_since(t0);
  report(3, converged == 0 && mislabeled == 0 && t < kNonConvergenceSeconds,
         fmt("%d starts on type2/type3: %d converged, %d near-stationary ends, %d not labeled "
             "spurious-stationary, %.2f s (< %.0f s)",
             runs, converged, near_stationary, mislabeled, t, kNonConvergenceSeconds));
}

void step_solvability() {
  std::mt19937_64 rng(4);
  int failed = 0, compared = 0, disagreements = 0, rank_deficient = 0;
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    Index n = std::uniform_int_distribution<Index>(1, 8)(rng);
    Index rank = std::uniform_int_distribution<Index>(0, n)(rng);
    Matrix j = Matrix::Zero(n, n);
    if (rank > 0) {
      Matrix u = Matrix::NullaryExpr(n, rank, [&] { return std::normal_distribution<>()(rng); });
      Matrix v = Matrix::NullaryExpr(rank, n, [&] { return std::normal_distribution<>()(rng); });
      j = u * v;
    }
    if (rank < n) ++rank_deficient;
    Vector f = uniform(rng, n, -10.0, 10.0);
    double h = std::exp(std::uniform_real_distribution<>(-8.0, 8.0)(rng));
    Vector a, b;
    try {
      a = qgs_psitc_step(j, f, h, LinearStrategy::normal_equations);
      b = qgs_psitc_step(j, f, h, LinearStrategy::least_squares);
    } catch (const std::exception&) {
      ++failed;
      continue;
    }
    if (!a.allFinite() || !b.allFinite()) {
      ++failed;
      continue;
    }
    Matrix sys = Matrix::Identity(n, n) / h + j.transpose() * j;
    Eigen::SelfAdjointEigenSolver<Matrix> es(sys);
    double cond = es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
    if (cond <= kWellConditioned) {
      ++compared;
      double rel = (a - b).norm() / std::max(b.norm(), std::numeric_limits<double>::min());
      worst = std::max(worst, rel);
      if (rel > kStrategyRelTol) ++disagreements;
    }
  }
  report(4, failed == 0 && disagreements == 0 && compared > 0,
         fmt("1000 (DF, h) pairs (%d rank-deficient): %d step failures; %d well-conditioned pairs, "
             "worst strategy gap %.2e (<= %.0e)",
             rank_deficient, failed, compared, worst, kStrategyRelTol));
}

std::vector<double> iterate_errors(SolverKind kind, const NonlinearSystem& sys, const Vector& x0,
                                   const SolverConfig& cfg, double root) {
  auto full = solve(kind, sys, x0, cfg);
  std::vector<double> err{std::abs(x0[0] - root)};
  for (int k = 1; k <= full.iterations; ++k) {
    SolverConfig c = cfg;
    c.max_iterations = k;
    err.push_back(std::abs(solve(kind, sys, x0, c).solution[0] - root));
  }
  return err;
}

void rate_signatures() {
  auto sys = builtin::quadratic();
  Vector x0 = Vector::Constant(1, 3.0);
  SolverConfig cfg;
  cfg.h_max = std::numeric_limits<double>::infinity();

  auto nr = iterate_errors(SolverKind::nr, sys, x0, cfg, 2.0);
  double nr_max = 0.0;
  std::string nr_list;
  for (std::size_t k = 0; k + 1 < nr.size(); ++k) {
    if (nr[k + 1] == 0.0) break;
    double q = nr[k + 1] / (nr[k] * nr[k]);
    nr_max = std::max(nr_max, q);
    nr_list += fmt("%s%.3f", nr_list.empty() ? "" : ",", q);
  }

  auto qg = iterate_errors(SolverKind::qgs_psitc, sys, x0, cfg, 2.0);
  std::vector<double> ratios;
  for (std::size_t k = 0; k + 1 < qg.size(); ++k) ratios.push_back(qg[k + 1] / qg[k]);
  bool qgs_ok = ratios.size() >= 3;
  std::string q_list;
  if (qgs_ok) {
    std::size_t n = ratios.size();
    for (std::size_t k = n - 3; k < n; ++k) {
      q_list += fmt("%s%.2e", q_list.empty() ? "" : ",", ratios[k]);
      if (!(ratios[k] < kQgsFinalRatio)) qgs_ok = false;
      if (k > n - 3 && !(ratios[k] < ratios[k - 1])) qgs_ok = false;
    }
  }
  report(5, nr_max <= kNewtonRatioBound && qgs_ok,
         fmt("quadratic from 3: NR e_k+1/e_k^2 = [%s] (<= %.1f); QGS-psitc final e_k+1/e_k = [%s] "
             "(decreasing, < %.1f)",
             nr_list.c_str(), kNewtonRatioBound, q_list.c_str(), kQgsFinalRatio));
}

void ser_behavior() {
  struct Case {
    NonlinearSystem sys;
    Vector x0;
  };
  Vector p0(2);
  p0 << 2.0, 0.5;
  std::vector<Case> cases{{builtin::quadratic(), Vector::Constant(1, 3.0)},
                          {builtin::identity(), Vector::Constant(1, 1.0)},
                          {builtin::pendulum(), p0},
                          {builtin::random_polynomial(4, 3), Vector::Constant(4, 0.2)}};
  int monotone = 0, bad = 0;
  double smallest_growth = std::numeric_limits<double>::infinity();
  SolverConfig cfg;
  for (auto& c : cases) {
    auto r = qgs_psitc_solve(c.sys, c.x0, cfg);
    bool mono = r.trace.size() > 1;
    for (std::size_t i = 1; i < r.trace.size(); ++i)
      mono = mono && r.trace[i].residual_norm < r.trace[i - 1].residual_norm;
    if (!mono) continue;
    ++monotone;
    for (std::size_t i = 1; i < r.trace.size(); ++i)
      if (r.trace[i].h < r.trace[i - 1].h) ++bad;
    smallest_growth = std::min(smallest_growth, r.trace.back().h / cfg.h0);
  }
  report(6, monotone > 0 && bad == 0 && smallest_growth > 100.0,
         fmt("%d monotone-residual runs, %d h decreases, smallest final h/h0 = %.3g (h_max = inf)",
             monotone, bad, smallest_growth));
}

void pendulum_basins() {
  auto t0 = Clock::now();
  region::GridSpec spec;
  spec.center = Vector(2);
  spec.center << pi, 0.0;
  spec.half_widths = Vector(2);
  spec.half_widths << pi, 2.0;
  spec.resolution = {41, 41};
  spec.swept_dims = {0, 1};
  auto sys = builtin::pendulum();
  Vector target = spec.center;
  auto nr = region::map_region(region::make_solver(SolverKind::nr, {}), sys, spec,
                               region::embed_start(spec, target), target);
  auto q = region::map_region(region::make_solver(SolverKind::qgs_psitc, {}), sys, spec,
                              region::embed_start(spec, target), target);
  auto a = region::connected_stats(nr), b = region::connected_stats(q);
  double fa = a.total_target_points ? double(a.outside_connected) / a.total_target_points : 1.0;
  double fb = b.total_target_points ? double(b.outside_connected) / b.total_target_points : 1.0;
  double t = seconds_since(t0);
  report(7, b.total_target_points > a.total_target_points && fb < fa && t < kPendulumSeconds,
         fmt("pendulum 41x41: target count QGS-psitc %d vs NR %d; outside-connected fraction "
             "%.3f vs %.3f (strict < required; <= holds: %s); %.1f s (< %.0f s)",
             b.total_target_points, a.total_target_points, fb, fa, fb <= fa ? "yes" : "no", t,
             kPendulumSeconds));
}

struct BatchRow {
  int contingency;
  SolverKind kind;
  SolverResult result;
};

void wscc_and_pendulum_sep() {
  auto t0 = Clock::now();
  auto pcase = power::load_case(std::string(UEP_DATA_DIR) + "/wscc9.json");
  auto list = power::load_contingencies(std::string(UEP_DATA_DIR) + "/wscc9_contingencies.json");
  auto starts = power::read_json_file(std::string(UEP_DATA_DIR) + "/wscc9_starts.json");
  auto sep = power::power_flow_sep(pcase);

  const std::vector<SolverKind> kinds{SolverKind::nr, SolverKind::cnr, SolverKind::psitc_exact,
                                      SolverKind::qgs_psitc, SolverKind::hybrid};
  std::vector<BatchRow> rows;
  int contingencies_ok = 0, sep_checks = 0, sep_failures = 0;
  std::string per_contingency;
  std::map<SolverKind, double> wall;
  for (const auto& c : list) {
    auto spm = power::assemble_spm(pcase, c, sep);
    auto sys = spm.as_system();
    Vector x0;
    for (const auto& s : starts.at("starts"))
      if (s.at("contingency").get<int>() == c.id) x0 = vector_from_json(s.at("x0"));
    if (x0.size() != sys.dimension()) {
      per_contingency += fmt(" c%d:no-start", c.id);
      continue;
    }
    bool found = false;
    for (auto kind : kinds) {
      std::vector<double> times;
      SolverResult r;
      for (int rep = 0; rep < kTimingRepeats; ++rep) {
        r = solve(kind, sys, x0, SolverConfig{});
        times.push_back(r.wall_time);
      }
      std::nth_element(times.begin(), times.begin() + kTimingRepeats / 2, times.end());
      r.wall_time = times[kTimingRepeats / 2];
      wall[kind] += r.wall_time;
      if (r.converged() && sys.residual(r.solution).norm() <= kRootTol &&
          classify_solution(sys, r.solution, kRootTol) == SolutionType::type1) {
        ++sep_checks;
        auto rep = verify_qgs_sep(QgsSystem(sys), r.solution, kRootTol);
        if (rep.positive_definite) found = true;
        else ++sep_failures;
      }
      rows.push_back({c.id, kind, r});
    }
    if (found) ++contingencies_ok;
  }

  std::map<SolverKind, double> avg;
  std::map<SolverKind, int> failed;
  for (auto kind : kinds) {
    double sum = 0.0;
    int n = 0;
    for (const auto& r : rows)
      if (r.kind == kind) {
        if (r.result.converged()) {
          sum += r.result.iterations;
          ++n;
        } else {
          ++failed[kind];
        }
      }
    avg[kind] = n ? sum / n : std::numeric_limits<double>::quiet_NaN();
  }
  bool cnr_largest = true;
  for (auto kind : kinds)
    if (kind != SolverKind::cnr && !(avg[SolverKind::cnr] > avg[kind])) cnr_largest = false;
  int total_failed = 0;
  for (auto& [k, v] : failed) total_failed += v;
  double t = seconds_since(t0);

  // Criterion 2: pendulum eigenvalues plus every converged type-1 WSCC solution.
  Vector uep(2);
  uep << pi, 0.0;
  auto prep = verify_qgs_sep(QgsSystem(builtin::pendulum()), uep);
  bool eig_ok = prep.positive_definite && prep.eigenvalues.size() == 2 &&
                std::abs(prep.eigenvalues[0] - kPendulumEigLow) <= kEigenTol &&
                std::abs(prep.eigenvalues[1] - kPendulumEigHigh) <= kEigenTol;
  report(2, eig_ok && sep_failures == 0 && sep_checks > 0,
         fmt("pendulum (pi,0) positive definite, eigenvalues {%.4f, %.4f} (+-%.0e of {%.4f, %.4f}); "
             "%d converged type-1 WSCC solutions checked, %d not positive definite",
             prep.eigenvalues.size() > 0 ? prep.eigenvalues[0] : NAN,
             prep.eigenvalues.size() > 1 ? prep.eigenvalues[1] : NAN, kEigenTol, kPendulumEigLow,
             kPendulumEigHigh, sep_checks, sep_failures));

  double nr = avg[SolverKind::nr], qg = avg[SolverKind::qgs_psitc];
  bool pass8 = sep.max_mismatch <= kMismatchTol && contingencies_ok == static_cast<int>(list.size()) &&
               nr >= kNrItersLow && nr <= kNrItersHigh && qg >= kQgsItersLow && qg <= kQgsItersHigh &&
               cnr_largest && t < kWsccSeconds;
  report(8, pass8,
         fmt("WSCC 9-bus: power-flow mismatch %.1e (<= %.0e); %d/%zu contingencies with a type-1 "
             "QGS SEP; avg iterations NR %.2f [%g,%g], CNR %.2f, psitc-exact %.2f, QGS-psitc %.2f "
             "[%g,%g], hybrid %.2f; CNR largest: %s; %d non-converged runs; %.1f s (< %.0f s)",
             sep.max_mismatch, kMismatchTol, contingencies_ok, list.size(), nr, kNrItersLow,
             kNrItersHigh, avg[SolverKind::cnr], avg[SolverKind::psitc_exact], qg, kQgsItersLow,
             kQgsItersHigh, avg[SolverKind::hybrid], cnr_largest ? "yes" : "no", total_failed, t,
             kWsccSeconds));

  double ratio = wall[SolverKind::psitc_exact] / wall[SolverKind::qgs_psitc];
  report(9, ratio >= kSpeedupFloor,
         fmt("wall time psitc-exact %.3e s / qgs-psitc %.3e s = %.2f (>= %.1f; median of %d repeats)",
             wall[SolverKind::psitc_exact], wall[SolverKind::qgs_psitc], ratio, kSpeedupFloor,
             kTimingRepeats));

  report(10, avg[SolverKind::hybrid] <= qg,
         fmt("avg iterations hybrid %.2f <= QGS-psitc %.2f", avg[SolverKind::hybrid], qg));
}

}  // namespace

int main() {
  struct Step {
    const char* name;
    std::function<void()> run;
  };
  const Step steps[] = {{"gradient", gradient_structure}, {"wscc", wscc_and_pendulum_sep},
                        {"non-convergence", non_convergence},           {"step", step_solvability},
                        {"rate", rate_signatures},        {"ser", ser_behavior},
                        {"pendulum", pendulum_basins}};
  std::map<std::string, std::string> errors;
  for (const auto& s : steps) {
    try {
      s.run();
    } catch (const std::exception& e) {
      errors[s.name] = e.what();
    }
  }
  for (const auto& [name, what] : errors) std::printf("error in %s checks: %s\n", name.c_str(), what.c_str());
  int failures = 0, unexpected = 0;
  for (int id = 1; id <= 10; ++id) {
    auto it = verdicts.find(id);
    Verdict v = it != verdicts.end() ? it->second : Verdict{false, "not evaluated (see error above)"};
    const bool known = std::ranges::find(kUnattainable, id) != kUnattainable.end();
    std::printf("[%s] criterion %2d: %s%s\n", v.pass ? "PASS" : "FAIL", id, v.detail.c_str(),
                !v.pass && known ? " [unattainable as stated]" : "");
    if (!v.pass) {
      ++failures;
      if (!known) ++unexpected;
    }
  }
  std::printf("%d failing criteria, %d unexpected\n", failures, unexpected);
  return unexpected ? 1 : 0;
}
