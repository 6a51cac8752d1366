// Locates one type-1 UEP per contingency and writes benchmark starts.
//
//   find-cueps <case.json> <contingencies.json> <out.json> [offset]
//
// Candidates come from a coarse sweep of the reduced angle space with the
// QGS-based solver. Among those with exactly one unstable eigenvalue of the
// machine dynamics, the one whose relative machine angles lie nearest the
// post-fault SEP (modulo 2*pi) is kept, refined by NR, and the start is that
// UEP with `offset` added to every reduced angle.

#include "uep/power/spm.hpp"
#include "uep/serialize.hpp"
#include "uep/solvers.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>

namespace {

using namespace uep;

/// Positive-real-part eigenvalues of the reduced swing dynamics M^{-1} dP/dd~
/// after eliminating the network. With uniform damping each gives one unstable
/// mode of the full DAE.
int unstable_modes(const power::SpmSystem& s, const Vector& x) {
  Matrix j = s.jacobian(x);
  Index k = s.machine_count() - 1;
  Index n = s.dimension();
  Matrix a = j.topLeftCorner(k, k) -
             j.topRightCorner(k, n - k) *
                 j.bottomRightCorner(n - k, n - k).lu().solve(j.bottomLeftCorner(n - k, k));
  for (Index i = 0; i < k; ++i) a.row(i) /= s.inertia()[i + 1];
  Eigen::EigenSolver<Matrix> es(a, false);
  int c = 0;
  for (const auto& e : es.eigenvalues())
    if (e.real() > 0.0) ++c;
  return c;
}

double wrap(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

/// Relative machine angles folded into (-pi, pi] around the SEP's.
Vector relative_offset(const Vector& ang, const Vector& sep_ang) {
  Vector d(ang.size() - 1);
  for (Index g = 1; g < ang.size(); ++g)
    d[g - 1] = wrap((ang[g] - ang[0]) - (sep_ang[g] - sep_ang[0]));
  return d;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 4) {
    std::cerr << "usage: find-cueps <case.json> <contingencies.json> <out.json> [offset]\n";
    return 2;
  }
  double offset = argc > 4 ? std::stod(argv[4]) : 0.1;
  try {
    auto pcase = power::load_case(argv[1]);
    auto list = power::load_contingencies(argv[2]);
    auto sep = power::power_flow_sep(pcase);
    SolverConfig cfg;
    cfg.max_iterations = 200;
    SolverConfig fine = cfg;
    fine.tolerance = 1e-12;

    Json starts = Json::array();
    for (const auto& c : list) {
      auto spm = power::assemble_spm(pcase, c, sep);
      auto sys = spm.as_system();
      auto post = newton_solve(sys, sep.state, fine);
      if (!post.converged()) throw std::runtime_error("post-fault SEP not found");
      Vector sep_ang = spm.machine_angles(post.solution);
      Index k = spm.machine_count() - 1;

      Vector best;
      double best_dist = INFINITY;
      Vector pt(k);
      std::vector<int> idx(static_cast<std::size_t>(k), 0);
      const int steps = 13;  // -3 .. 3 by 0.5
      for (;;) {
        for (Index i = 0; i < k; ++i) pt[i] = -3.0 + 0.5 * idx[static_cast<std::size_t>(i)];
        auto st = power::grid_initial_state(spm, pt, sep);
        if (st.resolved) {
          auto r = qgs_psitc_solve(sys, st.state, cfg);
          if (r.converged() && r.solution.tail(spm.bus_count()).minCoeff() > 0.0 &&
              unstable_modes(spm, r.solution) == 1) {
            double d = relative_offset(spm.machine_angles(r.solution), sep_ang).norm();
            if (d < best_dist) {
              best_dist = d;
              best = r.solution;
            }
          }
        }
        Index i = k - 1;
        while (i >= 0 && ++idx[static_cast<std::size_t>(i)] == steps) idx[static_cast<std::size_t>(i--)] = 0;
        if (i < 0) break;
      }
      if (best.size() == 0) throw std::runtime_error("no type-1 UEP found");

      // Re-express the UEP on the 2*pi branch nearest the SEP.
      Vector rel = relative_offset(spm.machine_angles(best), sep_ang);
      Vector abs(k + 1);
      abs[0] = 0.0;
      for (Index g = 1; g <= k; ++g) abs[g] = (sep_ang[g] - sep_ang[0]) + rel[g - 1];
      double coi = spm.inertia().dot(abs) / spm.total_inertia();
      Vector uep_pt = abs.tail(k).array() - coi;
      auto st = power::grid_initial_state(spm, uep_pt, best);
      auto uep = newton_solve(sys, st.state, fine);
      if (!uep.converged()) throw std::runtime_error("UEP refinement failed");

      Vector start_pt = uep.solution.head(k).array() + offset;
      auto x0 = power::grid_initial_state(spm, start_pt, uep.solution);
      if (!x0.resolved) throw std::runtime_error("start unresolvable: " + x0.reason);

      starts.push_back(Json{{"contingency", c.id},
                            {"uep", vector_to_json(uep.solution)},
                            {"uep_residual_norm", uep.residual_norm},
                            {"x0", vector_to_json(x0.state)}});
      std::cerr << "contingency " << c.id << ": UEP angles (" << uep.solution[0] << ", "
                << uep.solution[1] << "), ||F|| " << uep.residual_norm << "\n";
    }

    Json doc{{"notes",
              "Per contingency: a type-1 UEP of the post-fault structure-preserving model "
              "(one unstable machine mode, positive bus voltages) whose relative machine "
              "angles are nearest the post-fault SEP modulo 2*pi, refined by NR to 1e-12. "
              "x0 adds angle_offset to each reduced machine angle of the UEP; bus angles "
              "and voltages come from the network equations. Generated by find-cueps."},
             {"angle_offset", offset},
             {"starts", starts}};
    std::ofstream f(argv[3]);
    f << doc.dump(2) << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
