#pragma once

#include "uep/solvers.hpp"

#include <json.hpp>

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace uep::region {

struct GridSpec {
  Vector center;              // target coordinates in the swept subspace
  Vector half_widths;
  std::vector<int> resolution;  // odd, >= 3 per axis
  std::vector<Index> swept_dims;  // state coordinates that vary

  Index axes() const { return center.size(); }
  Index node_count() const;
  /// Throws InputError unless every axis has resolution >= 3 (odd) and a positive half-width.
  void validate() const;
  double spacing(Index axis) const;
  /// Axis indices of a flat node index (row-major, last axis fastest).
  std::vector<int> unflatten(Index node) const;
  Index flatten(const std::vector<int>& multi) const;
  /// Node nearest a point of the swept subspace.
  Index nearest_node(const Vector& point) const;
};

/// Cartesian product of per-axis linspaces centered on spec.center, row-major.
std::vector<Vector> generate_grid(const GridSpec& spec);

enum class Outcome { target, other_solution, diverged, unresolvable };
std::string_view to_string(Outcome o);

struct PointRecord {
  Outcome outcome = Outcome::unresolvable;
  int iterations = 0;
  double residual = 0.0;
};

/// Runs one solver from one initial state.
using Solver = std::function<SolverResult(const NonlinearSystem&, const Vector&)>;
/// Maps a grid point of the swept subspace to a full initial state; std::nullopt
/// marks the point unresolvable.
using StartBuilder = std::function<std::optional<Vector>(const Vector&)>;

Solver make_solver(SolverKind kind, SolverConfig cfg);

/// Start builder that overwrites the swept coordinates of `base_state`.
StartBuilder embed_start(const GridSpec& spec, Vector base_state);

struct RegionMap {
  GridSpec spec;
  std::vector<PointRecord> outcomes;  // grid order
  Vector target;
  double match_tolerance = 1e-4;
};

/// outcome = target iff the solver converged within `tolerance` (L2) of `target`.
PointRecord classify_point(const Solver& solver, const NonlinearSystem& sys,
                           const std::optional<Vector>& x0_full, const Vector& target,
                           double tolerance);

/// Classifies every grid node. Output is independent of `threads`.
RegionMap map_region(const Solver& solver, const NonlinearSystem& sys, const GridSpec& spec,
                     const StartBuilder& start, const Vector& target, double tolerance = 1e-4,
                     int threads = 1);

struct RegionStats {
  int total_target_points = 0;
  int inside_connected = 0;
  int outside_connected = 0;
  int unresolvable_points = 0;
  /// Set when no node reached the target.
  bool no_target_points = false;
};

/// Flood fill over target nodes with orthogonal adjacency, seeded at the node
/// nearest the target.
RegionStats connected_stats(const RegionMap& map);

/// Header: coord_0..coord_{d-1},outcome,iterations,residual
void write_csv(const RegionMap& map, std::ostream& out);
nlohmann::json stats_to_json(const RegionStats& stats);

}  // namespace uep::region
