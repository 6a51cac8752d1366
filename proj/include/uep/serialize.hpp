#pragma once

#include "uep/solvers.hpp"

#include <json.hpp>

namespace uep {

using Json = nlohmann::json;

/// Doubles that may be infinite are written as the strings "inf" / "-inf".
Json number_to_json(double v);
double number_from_json(const Json& j);

Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

Json to_json(const FdConfig& fd);
FdConfig fd_config_from_json(const Json& j);

/// Every field is written, defaults included.
Json to_json(const SolverConfig& cfg);
/// Missing keys keep their defaults.
SolverConfig solver_config_from_json(const Json& j);

Json to_json(const SolverResult& r);
SolverResult solver_result_from_json(const Json& j);

Json to_json(const DefinitenessReport& rep);

}  // namespace uep
