#include "uep/serialize.hpp"

#include <cmath>
#include <limits>

namespace uep {

Json number_to_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

double number_from_json(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "Infinity") return std::numeric_limits<double>::infinity();
    if (s == "-inf" || s == "-Infinity") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  throw InputError("expected a number, got " + j.dump());
}

Json vector_to_json(const Vector& v) {
  Json arr = Json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(number_to_json(v[i]));
  return arr;
}

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw InputError("expected an array of numbers");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = number_from_json(j[i]);
  return v;
}

Json to_json(const FdConfig& fd) {
  return {{"perturbation", fd.perturbation},
          {"scheme", fd.scheme == FdScheme::forward ? "forward" : "central"}};
}

FdConfig fd_config_from_json(const Json& j) {
  FdConfig fd;
  if (j.contains("perturbation")) fd.perturbation = number_from_json(j["perturbation"]);
  if (j.contains("scheme")) {
    const auto s = j["scheme"].get<std::string>();
    if (s == "forward") fd.scheme = FdScheme::forward;
    else if (s == "central") fd.scheme = FdScheme::central;
    else throw InputError("unknown finite-difference scheme '" + s + "'");
  }
  fd.validate();
  return fd;
}

Json to_json(const SolverConfig& cfg) {
  return {{"tolerance", cfg.tolerance},
          {"h0", cfg.h0},
          {"h_max", number_to_json(cfg.h_max)},
          {"max_iterations", cfg.max_iterations},
          {"step_rule", to_string(cfg.step_rule)},
          {"linear_strategy", to_string(cfg.linear_strategy)},
          {"inexactness", cfg.inexactness},
          {"cnr_step", cfg.cnr_step},
          {"hybrid_switch_threshold", cfg.hybrid_switch_threshold},
          {"hybrid_newton_budget", cfg.hybrid_newton_budget},
          {"stagnation_window", cfg.stagnation_window},
          {"divergence_factor", cfg.divergence_factor},
          {"box_bound", number_to_json(cfg.box_bound)},
          {"fd", to_json(cfg.fd)},
          {"dq_fd", to_json(cfg.dq_fd)}};
}

SolverConfig solver_config_from_json(const Json& j) {
  SolverConfig cfg;
  const auto num = [&j](const char* key, double& out) {
    if (j.contains(key)) out = number_from_json(j[key]);
  };
  num("tolerance", cfg.tolerance);
  num("h0", cfg.h0);
  num("h_max", cfg.h_max);
  if (j.contains("max_iterations")) cfg.max_iterations = j["max_iterations"].get<int>();
  if (j.contains("step_rule")) cfg.step_rule = parse_step_rule(j["step_rule"].get<std::string>());
  if (j.contains("linear_strategy")) {
    cfg.linear_strategy = parse_linear_strategy(j["linear_strategy"].get<std::string>());
  }
  num("inexactness", cfg.inexactness);
  num("cnr_step", cfg.cnr_step);
  num("hybrid_switch_threshold", cfg.hybrid_switch_threshold);
  if (j.contains("hybrid_newton_budget")) {
    cfg.hybrid_newton_budget = j["hybrid_newton_budget"].get<int>();
  }
  if (j.contains("stagnation_window")) cfg.stagnation_window = j["stagnation_window"].get<int>();
  num("divergence_factor", cfg.divergence_factor);
  num("box_bound", cfg.box_bound);
  if (j.contains("fd")) cfg.fd = fd_config_from_json(j["fd"]);
  if (j.contains("dq_fd")) cfg.dq_fd = fd_config_from_json(j["dq_fd"]);
  cfg.validate();
  return cfg;
}

Json to_json(const SolverResult& r) {
  Json trace = Json::array();
  for (const auto& t : r.trace) {
    trace.push_back({{"iteration", t.iteration},
                     {"residual_norm", number_to_json(t.residual_norm)},
                     {"h", number_to_json(t.h)}});
  }
  Json j{{"status", to_string(r.status)},
         {"solution", vector_to_json(r.solution)},
         {"residual_norm", number_to_json(r.residual_norm)},
         {"iterations", r.iterations},
         {"classification", to_string(r.classification)},
         {"trace", trace},
         {"wall_time", r.wall_time}};
  if (!r.message.empty()) j["message"] = r.message;
  if (r.hybrid) {
    j["hybrid"] = {{"newton", r.hybrid->newton},
                   {"qgs_psitc", r.hybrid->qgs_psitc},
                   {"newton_finish", r.hybrid->newton_finish},
                   {"failed_phase", r.hybrid->failed_phase}};
  }
  return j;
}

SolverResult solver_result_from_json(const Json& j) {
  SolverResult r;
  r.status = parse_status(j.at("status").get<std::string>());
  r.solution = vector_from_json(j.at("solution"));
  r.residual_norm = number_from_json(j.at("residual_norm"));
  r.iterations = j.at("iterations").get<int>();
  r.classification = parse_solution_type(j.at("classification").get<std::string>());
  if (j.contains("trace")) {
    for (const auto& t : j["trace"]) {
      r.trace.push_back({t.at("iteration").get<int>(), number_from_json(t.at("residual_norm")),
                         number_from_json(t.at("h"))});
    }
  }
  if (j.contains("wall_time")) r.wall_time = j["wall_time"].get<double>();
  if (j.contains("message")) r.message = j["message"].get<std::string>();
  if (j.contains("hybrid")) {
    const auto& h = j["hybrid"];
    r.hybrid = HybridPhases{h.at("newton").get<int>(), h.at("qgs_psitc").get<int>(),
                            h.at("newton_finish").get<int>(), h.at("failed_phase").get<int>()};
  }
  return r;
}

Json to_json(const DefinitenessReport& rep) {
  return {{"positive_definite", rep.positive_definite},
          {"smallest_pivot", number_to_json(rep.smallest_pivot)},
          {"largest_diagonal", rep.largest_diagonal},
          {"singularity_threshold", rep.singularity_threshold},
          {"residual_norm", rep.residual_norm},
          {"not_at_equilibrium", rep.not_at_equilibrium},
          {"eigenvalues", rep.eigenvalues}};
}

}  // namespace uep
