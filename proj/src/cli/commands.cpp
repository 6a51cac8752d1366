#include "uep/cli/commands.hpp"

#include "uep/builtin_systems.hpp"
#include "uep/power/case.hpp"
#include "uep/power/network.hpp"
#include "uep/power/power_flow.hpp"
#include "uep/power/spm.hpp"
#include "uep/qgs.hpp"
#include "uep/region/region_map.hpp"
#include "uep/serialize.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace uep::cli {
namespace {

struct Options {
  std::string system;
  std::string case_path;
  std::string contingencies_path;
  std::optional<int> contingency_id;
  std::vector<std::string> solvers;
  std::string x0;
  std::string target;
  std::optional<double> tol;
  std::optional<double> h0;
  std::string h_max;
  std::optional<int> max_iter;
  std::string step_rule;
  std::string linear;
  std::vector<double> grid_center;
  std::vector<double> grid_half_widths;
  std::vector<int> grid_resolution;
  double match_tol = 1e-4;
  std::string out;
  int threads = 1;
  int repeat = 1;
};

/// Either a builtin system or a structure-preserving power system.
struct Problem {
  NonlinearSystem system;
  std::string label;
  std::optional<power::SpmSystem> spm;
  std::optional<power::SepSolution> sep;
  std::optional<int> contingency;
};

double parse_number(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw InputError("not a number: '" + s + "'");
  }
  if (used != s.size()) throw InputError("not a number: '" + s + "'");
  return v;
}

bool looks_inline(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isdigit(static_cast<unsigned char>(c)) || c == ',' || c == '.' || c == '-' ||
           c == '+' || c == 'e' || c == 'E' || c == ' ';
  });
}

Vector parse_inline(const std::string& s) {
  std::vector<double> vals;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove(item.begin(), item.end(), ' '), item.end());
    if (item.empty()) throw InputError("empty entry in vector '" + s + "'");
    vals.push_back(parse_number(item));
  }
  return Eigen::Map<Vector>(vals.data(), static_cast<Index>(vals.size()));
}

SolverConfig resolve_config(const Options& o) {
  SolverConfig cfg;
  if (o.tol) cfg.tolerance = *o.tol;
  if (o.h0) cfg.h0 = *o.h0;
  if (!o.h_max.empty()) cfg.h_max = parse_number(o.h_max);
  if (o.max_iter) cfg.max_iterations = *o.max_iter;
  if (!o.step_rule.empty()) cfg.step_rule = parse_step_rule(o.step_rule);
  if (!o.linear.empty()) cfg.linear_strategy = parse_linear_strategy(o.linear);
  cfg.validate();
  return cfg;
}

std::vector<SolverKind> resolve_solvers(const Options& o, std::vector<SolverKind> fallback) {
  if (o.solvers.empty()) return fallback;
  std::vector<SolverKind> kinds;
  for (const auto& s : o.solvers) kinds.push_back(parse_solver_kind(s));
  return kinds;
}

std::optional<power::Contingency> resolve_contingency(const Options& o) {
  if (!o.contingency_id) return std::nullopt;
  if (o.contingencies_path.empty())
    throw InputError("--contingency-id needs --contingencies");
  auto list = power::load_contingencies(o.contingencies_path);
  return power::find_contingency(list, *o.contingency_id);
}

Problem resolve_problem(const Options& o) {
  if (!o.system.empty() && !o.case_path.empty())
    throw InputError("give either --system or --case, not both");
  if (!o.system.empty()) {
    std::string name = o.system;
    if (name.rfind("builtin:", 0) == 0) name = name.substr(8);
    return Problem{builtin::by_name(name), "builtin:" + name, std::nullopt, std::nullopt,
                   std::nullopt};
  }
  if (o.case_path.empty()) throw InputError("no system: give --system or --case");
  auto pcase = power::load_case(o.case_path);
  auto sep = power::power_flow_sep(pcase);
  auto contingency = resolve_contingency(o);
  auto spm = power::assemble_spm(pcase, contingency, sep);
  Problem p{spm.as_system(), o.case_path, spm, sep, std::nullopt};
  if (contingency) p.contingency = contingency->id;
  return p;
}

/// Vector from a JSON document: an array, a solver result, or a starts file.
Vector vector_from_document(const Json& j, const std::string& path,
                            const std::optional<int>& contingency) {
  if (j.is_array()) return vector_from_json(j);
  if (j.is_object() && j.contains("solution")) return vector_from_json(j.at("solution"));
  if (j.is_object() && j.contains("starts")) {
    if (!contingency) throw InputError(path + ": starts file needs --contingency-id");
    for (const auto& s : j.at("starts"))
      if (s.at("contingency").get<int>() == *contingency) return vector_from_json(s.at("x0"));
    throw InputError(path + ": no start for contingency " + std::to_string(*contingency));
  }
  throw InputError(path + ": expected an array, a solver result or a starts file");
}

Vector read_point(const std::string& spec, const std::optional<int>& contingency) {
  if (looks_inline(spec)) return parse_inline(spec);
  return vector_from_document(power::read_json_file(spec), spec, contingency);
}

/// For power systems a point of length n-1 is a reduced machine-angle point.
Vector expand_start(const Problem& p, const Vector& x) {
  if (!p.spm || x.size() == p.system.dimension()) return x;
  if (x.size() != p.spm->machine_count() - 1)
    throw InputError("x0 has length " + std::to_string(x.size()) + ", expected " +
                     std::to_string(p.system.dimension()) + " or " +
                     std::to_string(p.spm->machine_count() - 1));
  auto st = power::grid_initial_state(*p.spm, x, *p.sep);
  if (!st.resolved) throw InputError("initial point unresolvable: " + st.reason);
  return st.state;
}

Vector initial_point(const Options& o, const Problem& p) {
  if (o.x0.empty()) throw InputError("--x0 is required");
  Vector x = expand_start(p, read_point(o.x0, p.contingency));
  if (x.size() != p.system.dimension())
    throw InputError("x0 has length " + std::to_string(x.size()) + ", system dimension is " +
                     std::to_string(p.system.dimension()));
  return x;
}

Json system_json(const Problem& p) {
  Json j{{"source", p.label}, {"name", p.system.name()}, {"dimension", p.system.dimension()}};
  if (p.contingency) j["contingency"] = *p.contingency;
  return j;
}

void write_document(const Json& doc, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << doc.dump(2) << "\n";
    return;
  }
  std::ofstream f(path);
  if (!f) throw InputError("cannot write " + path);
  f << doc.dump(2) << "\n";
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int cmd_solve(const Options& o, std::ostream& out) {
  auto cfg = resolve_config(o);
  auto kinds = resolve_solvers(o, {SolverKind::qgs_psitc});
  if (kinds.size() != 1) throw InputError("solve takes a single --solver");
  auto p = resolve_problem(o);
  Vector x0 = initial_point(o, p);
  auto r = solve(kinds[0], p.system, x0, cfg);
  Json doc = to_json(r);
  doc["solver"] = to_string(kinds[0]);
  doc["config"] = to_json(cfg);
  doc["system"] = system_json(p);
  doc["x0"] = vector_to_json(x0);
  write_document(doc, o.out, out);
  if (!o.out.empty())
    out << to_string(kinds[0]) << ": " << to_string(r.status) << " after " << r.iterations
        << " iterations, ||F|| = " << fmt("%.3e", r.residual_norm) << ", "
        << to_string(r.classification) << "\n";
  return r.converged() ? kSuccess : kMethodFailure;
}

int cmd_classify(const Options& o, std::ostream& out) {
  auto cfg = resolve_config(o);
  auto p = resolve_problem(o);
  Vector x = initial_point(o, p);
  auto type = classify_solution(p.system, x, cfg.tolerance, cfg.fd);
  QgsSystem q(p.system, cfg.fd);
  auto rep = verify_qgs_sep(q, x, cfg.tolerance);
  Json doc{{"point", vector_to_json(x)},
           {"residual_norm", p.system.residual(x).norm()},
           {"classification", to_string(type)},
           {"definiteness", to_json(rep)},
           {"config", to_json(cfg)},
           {"system", system_json(p)}};
  write_document(doc, o.out, out);
  if (!o.out.empty()) out << to_string(type) << "\n";
  return kSuccess;
}

Json sep_to_json(const power::SepSolution& s, const power::PowerFlowOptions& opts) {
  return Json{{"v", vector_to_json(s.v)},
              {"theta", vector_to_json(s.theta)},
              {"p_gen", vector_to_json(s.p_gen)},
              {"q_gen", vector_to_json(s.q_gen)},
              {"eq_prime", vector_to_json(s.eq_prime)},
              {"delta", vector_to_json(s.delta)},
              {"pm", vector_to_json(s.pm)},
              {"inertia", vector_to_json(s.inertia)},
              {"delta_coi", s.delta_coi},
              {"state", vector_to_json(s.state)},
              {"iterations", s.iterations},
              {"max_mismatch", s.max_mismatch},
              {"mismatch_trace", s.mismatch_trace},
              {"options",
               {{"tolerance", opts.tolerance}, {"max_iterations", opts.max_iterations}}}};
}

int cmd_power_flow(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.case_path.empty()) throw InputError("power-flow needs --case");
  auto pcase = power::load_case(o.case_path);
  power::PowerFlowOptions opts;
  if (o.tol) opts.tolerance = *o.tol;
  if (o.max_iter) opts.max_iterations = *o.max_iter;
  try {
    auto sep = power::power_flow_sep(pcase, opts);
    Json doc = sep_to_json(sep, opts);
    doc["case"] = pcase.name;
    write_document(doc, o.out, out);
    if (!o.out.empty())
      out << "power flow converged in " << sep.iterations << " iterations, max mismatch "
          << fmt("%.3e", sep.max_mismatch) << "\n";
    return kSuccess;
  } catch (const power::PowerFlowError& e) {
    err << "error: " << e.what() << "\nmismatch trace:";
    for (double m : e.mismatch_trace()) err << " " << fmt("%.3e", m);
    err << "\n";
    return kMethodFailure;
  }
}

region::GridSpec grid_from_options(const Options& o, const Problem& p, const Vector& target) {
  region::GridSpec spec;
  Index axes = p.spm ? p.spm->machine_count() - 1 : p.system.dimension();
  spec.center = o.grid_center.empty()
                    ? Vector(target.head(axes))
                    : Vector(Eigen::Map<const Vector>(o.grid_center.data(),
                                                      static_cast<Index>(o.grid_center.size())));
  if (spec.center.size() != axes)
    throw InputError("--grid-center needs " + std::to_string(axes) + " values");
  if (o.grid_half_widths.size() == 1)
    spec.half_widths = Vector::Constant(axes, o.grid_half_widths[0]);
  else if (static_cast<Index>(o.grid_half_widths.size()) == axes)
    spec.half_widths = Eigen::Map<const Vector>(o.grid_half_widths.data(), axes);
  else
    throw InputError("--grid-half-widths needs 1 or " + std::to_string(axes) + " values");
  if (o.grid_resolution.size() == 1)
    spec.resolution.assign(static_cast<std::size_t>(axes), o.grid_resolution[0]);
  else if (static_cast<Index>(o.grid_resolution.size()) == axes)
    spec.resolution = o.grid_resolution;
  else
    throw InputError("--grid-resolution needs 1 or " + std::to_string(axes) + " values");
  for (Index a = 0; a < axes; ++a) spec.swept_dims.push_back(a);
  spec.validate();
  return spec;
}

Json grid_json(const region::GridSpec& spec) {
  return Json{{"center", vector_to_json(spec.center)},
              {"half_widths", vector_to_json(spec.half_widths)},
              {"resolution", spec.resolution},
              {"swept_dims", spec.swept_dims}};
}

int cmd_map_region(const Options& o, std::ostream& out) {
  auto cfg = resolve_config(o);
  auto kinds = resolve_solvers(o, {SolverKind::nr, SolverKind::qgs_psitc});
  if (o.out.empty()) throw InputError("map-region needs --out (output prefix)");
  if (o.target.empty()) throw InputError("map-region needs --target");
  if (o.grid_half_widths.empty()) throw InputError("map-region needs --grid-half-widths");
  if (o.grid_resolution.empty()) throw InputError("map-region needs --grid-resolution");
  if (!(o.match_tol > 0.0)) throw InputError("--match-tol must be positive");
  if (o.threads < 1) throw InputError("--threads must be positive");
  auto p = resolve_problem(o);
  Vector target = read_point(o.target, p.contingency);
  if (target.size() != p.system.dimension())
    throw InputError("target has length " + std::to_string(target.size()) +
                     ", system dimension is " + std::to_string(p.system.dimension()));
  auto spec = grid_from_options(o, p, target);

  double target_residual = p.system.residual(target).norm();
  if (!(target_residual <= cfg.tolerance)) {
    std::ostringstream m;
    m << "target is not resolved: ||F(target)|| = " << fmt("%.3e", target_residual)
      << " > tol " << fmt("%.3e", cfg.tolerance);
    throw EvaluationError(m.str());
  }

  region::StartBuilder start;
  if (p.spm) {
    auto spm = *p.spm;
    start = [spm, target](const Vector& pt) -> std::optional<Vector> {
      auto st = power::grid_initial_state(spm, pt, target);
      if (!st.resolved) return std::nullopt;
      return st.state;
    };
  } else {
    start = region::embed_start(spec, target);
  }

  for (auto kind : kinds) {
    auto map = region::map_region(region::make_solver(kind, cfg), p.system, spec, start, target,
                                  o.match_tol, o.threads);
    auto stats = region::connected_stats(map);
    std::string stem = o.out + "_" + std::string(to_string(kind));
    std::ofstream csv(stem + ".csv");
    if (!csv) throw InputError("cannot write " + stem + ".csv");
    region::write_csv(map, csv);
    Json summary{{"solver", to_string(kind)},
                 {"stats", region::stats_to_json(stats)},
                 {"grid", grid_json(spec)},
                 {"target", vector_to_json(target)},
                 {"match_tolerance", o.match_tol},
                 {"config", to_json(cfg)},
                 {"system", system_json(p)}};
    std::ofstream js(stem + ".summary.json");
    if (!js) throw InputError("cannot write " + stem + ".summary.json");
    js << summary.dump(2) << "\n";
    out << to_string(kind) << ": " << stats.total_target_points << " target points, "
        << stats.inside_connected << " connected, " << stats.outside_connected << " outside, "
        << stats.unresolvable_points << " unresolvable -> " << stem << ".csv\n";
  }
  return kSuccess;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int cmd_benchmark(const Options& o, std::ostream& out) {
  auto cfg = resolve_config(o);
  auto kinds = resolve_solvers(o, {SolverKind::nr, SolverKind::cnr, SolverKind::psitc_exact,
                                   SolverKind::qgs_psitc, SolverKind::hybrid});
  if (o.case_path.empty()) throw InputError("benchmark needs --case");
  if (o.contingencies_path.empty()) throw InputError("benchmark needs --contingencies");
  if (o.x0.empty()) throw InputError("benchmark needs --x0 (starts file)");
  if (o.repeat < 1) throw InputError("--repeat must be positive");
  auto pcase = power::load_case(o.case_path);
  auto contingencies = power::load_contingencies(o.contingencies_path);
  if (o.contingency_id)
    contingencies = {power::find_contingency(contingencies, *o.contingency_id)};
  Json starts = power::read_json_file(o.x0);
  auto sep = power::power_flow_sep(pcase);

  Json rows = Json::array();
  struct Acc {
    int converged = 0, failed = 0;
    double iterations = 0.0, seconds = 0.0;
  };
  std::vector<Acc> acc(kinds.size());
  for (const auto& c : contingencies) {
    auto spm = power::assemble_spm(pcase, c, sep);
    Problem p{spm.as_system(), o.case_path, spm, sep, c.id};
    Vector x0;
    std::string start_error;
    try {
      x0 = expand_start(p, vector_from_document(starts, o.x0, c.id));
    } catch (const std::exception& e) {
      start_error = e.what();
    }
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      Json row{{"contingency", c.id}, {"solver", to_string(kinds[k])}};
      try {
        if (!start_error.empty()) throw InputError(start_error);
        std::vector<double> times;
        SolverResult r;
        for (int rep = 0; rep < o.repeat; ++rep) {
          r = solve(kinds[k], p.system, x0, cfg);
          times.push_back(r.wall_time);
        }
        r.wall_time = median(times);
        row["status"] = to_string(r.status);
        row["iterations"] = r.iterations;
        row["wall_time"] = r.wall_time;
        row["residual_norm"] = number_to_json(r.residual_norm);
        row["classification"] = to_string(r.classification);
        row["solution"] = vector_to_json(r.solution);
        if (r.converged()) {
          ++acc[k].converged;
          acc[k].iterations += r.iterations;
          acc[k].seconds += r.wall_time;
        } else {
          ++acc[k].failed;
        }
      } catch (const std::exception& e) {
        row["status"] = "error";
        row["error"] = e.what();
        ++acc[k].failed;
      }
      rows.push_back(row);
    }
  }

  Json averages = Json::object();
  out << "solver        runs  failed  avg_iter  avg_time_s\n";
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    const auto& a = acc[k];
    double it = a.converged ? a.iterations / a.converged : 0.0;
    double t = a.converged ? a.seconds / a.converged : 0.0;
    averages[std::string(to_string(kinds[k]))] = Json{{"converged_runs", a.converged},
                                                      {"failed_runs", a.failed},
                                                      {"average_iterations", it},
                                                      {"average_wall_time", t}};
    char line[128];
    std::snprintf(line, sizeof line, "%-12s  %4d  %6d  %8.2f  %10.3e\n",
                  std::string(to_string(kinds[k])).c_str(), a.converged + a.failed, a.failed, it,
                  t);
    out << line;
  }
  Json doc{{"rows", rows},
           {"averages", averages},
           {"repeat", o.repeat},
           {"config", to_json(cfg)},
           {"case", o.case_path},
           {"contingencies", o.contingencies_path},
           {"starts", o.x0}};
  if (!o.out.empty()) write_document(doc, o.out, out);
  return kSuccess;
}

void add_system_options(CLI::App* c, Options& o) {
  c->add_option("--system", o.system, "Builtin system, e.g. builtin:pendulum or randpoly:3:7");
  c->add_option("--case", o.case_path, "Power case JSON");
  c->add_option("--contingencies", o.contingencies_path, "Contingency list JSON");
  c->add_option("--contingency-id", o.contingency_id, "Contingency to apply");
}

void add_config_options(CLI::App* c, Options& o) {
  c->add_option("--tol", o.tol, "Tolerance on ||F||_2");
  c->add_option("--h0", o.h0, "Initial pseudo-time step");
  c->add_option("--h-max", o.h_max, "Pseudo-time step cap (number or inf)");
  c->add_option("--max-iter", o.max_iter, "Iteration budget");
  c->add_option("--step-rule", o.step_rule, "ser or step-norm");
  c->add_option("--linear", o.linear, "normal or lsq");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"UEP computation via quotient gradient systems", "uep-solve"};
  app.require_subcommand(1);

  auto* solve_cmd = app.add_subcommand("solve", "Run one solver from one initial point");
  add_system_options(solve_cmd, o);
  add_config_options(solve_cmd, o);
  solve_cmd->add_option("--solver", o.solvers, "nr, cnr, psitc-exact, qgs-psitc or hybrid");
  solve_cmd->add_option("--x0", o.x0, "Comma list or JSON file");
  solve_cmd->add_option("--out", o.out, "Result JSON (stdout when omitted)");

  auto* classify_cmd = app.add_subcommand("classify", "Classify a point of the QGS");
  add_system_options(classify_cmd, o);
  add_config_options(classify_cmd, o);
  classify_cmd->add_option("--x0", o.x0, "Comma list or JSON file");
  classify_cmd->add_option("--out", o.out, "Report JSON (stdout when omitted)");

  auto* pf_cmd = app.add_subcommand("power-flow", "Solve the pre-fault power flow");
  pf_cmd->add_option("--case", o.case_path, "Power case JSON");
  pf_cmd->add_option("--tol", o.tol, "Mismatch tolerance");
  pf_cmd->add_option("--max-iter", o.max_iter, "Iteration budget");
  pf_cmd->add_option("--out", o.out, "Report JSON (stdout when omitted)");

  auto* map_cmd = app.add_subcommand("map-region", "Map convergence regions on a grid");
  add_system_options(map_cmd, o);
  add_config_options(map_cmd, o);
  map_cmd->add_option("--solver", o.solvers, "Solvers to map (repeatable)");
  map_cmd->add_option("--target", o.target, "Target state: comma list or JSON file");
  map_cmd->add_option("--grid-center", o.grid_center, "Grid center (defaults to the target)")
      ->delimiter(',');
  map_cmd->add_option("--grid-half-widths", o.grid_half_widths, "Half-width per axis")
      ->delimiter(',');
  map_cmd->add_option("--grid-resolution", o.grid_resolution, "Nodes per axis (odd, >= 3)")
      ->delimiter(',');
  map_cmd->add_option("--match-tol", o.match_tol, "L2 distance counted as reaching the target");
  map_cmd->add_option("--threads", o.threads, "Worker threads");
  map_cmd->add_option("--out", o.out, "Output prefix");

  auto* bench_cmd = app.add_subcommand("benchmark", "Run solvers over a contingency batch");
  add_system_options(bench_cmd, o);
  add_config_options(bench_cmd, o);
  bench_cmd->add_option("--solver", o.solvers, "Solvers to run (repeatable; default all)");
  bench_cmd->add_option("--x0", o.x0, "Starts file");
  bench_cmd->add_option("--repeat", o.repeat, "Timing repeats (median reported)");
  bench_cmd->add_option("--out", o.out, "Report JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kInputError;
  }

  try {
    if (*solve_cmd) return cmd_solve(o, out);
    if (*classify_cmd) return cmd_classify(o, out);
    if (*pf_cmd) return cmd_power_flow(o, out, err);
    if (*map_cmd) return cmd_map_region(o, out);
    if (*bench_cmd) return cmd_benchmark(o, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kMethodFailure;
  }
  return kInputError;
}

}  // namespace uep::cli
