#include "uep/region/region_map.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <deque>
#include <thread>

namespace uep::region {

Index GridSpec::node_count() const {
  Index count = 1;
  for (int r : resolution) count *= r;
  return count;
}

void GridSpec::validate() const {
  const Index d = center.size();
  if (d < 1) throw InputError("grid needs at least one axis");
  if (half_widths.size() != d || static_cast<Index>(resolution.size()) != d ||
      static_cast<Index>(swept_dims.size()) != d) {
    throw InputError("grid center, half-widths, resolution and swept dims must agree in length");
  }
  for (Index a = 0; a < d; ++a) {
    const int r = resolution[static_cast<std::size_t>(a)];
    if (r < 3) throw InputError("grid resolution must be >= 3 on every axis");
    if (r % 2 == 0) throw InputError("grid resolution must be odd so the center is a node");
    if (!(half_widths[a] > 0.0)) throw InputError("grid half-widths must be positive");
  }
}

double GridSpec::spacing(Index axis) const {
  return 2.0 * half_widths[axis] / (resolution[static_cast<std::size_t>(axis)] - 1);
}

std::vector<int> GridSpec::unflatten(Index node) const {
  std::vector<int> multi(resolution.size());
  for (std::size_t a = resolution.size(); a-- > 0;) {
    multi[a] = static_cast<int>(node % resolution[a]);
    node /= resolution[a];
  }
  return multi;
}

Index GridSpec::flatten(const std::vector<int>& multi) const {
  Index node = 0;
  for (std::size_t a = 0; a < resolution.size(); ++a) node = node * resolution[a] + multi[a];
  return node;
}

Index GridSpec::nearest_node(const Vector& point) const {
  std::vector<int> multi(resolution.size());
  for (std::size_t a = 0; a < resolution.size(); ++a) {
    const Index ax = static_cast<Index>(a);
    const double lo = center[ax] - half_widths[ax];
    const long k = std::lround((point[ax] - lo) / spacing(ax));
    multi[a] = static_cast<int>(std::clamp<long>(k, 0, resolution[a] - 1));
  }
  return flatten(multi);
}

std::vector<Vector> generate_grid(const GridSpec& spec) {
  spec.validate();
  const Index d = spec.axes();
  std::vector<Vector> nodes;
  nodes.reserve(static_cast<std::size_t>(spec.node_count()));
  for (Index node = 0; node < spec.node_count(); ++node) {
    const auto multi = spec.unflatten(node);
    Vector p(d);
    for (Index a = 0; a < d; ++a) {
      const int r = spec.resolution[static_cast<std::size_t>(a)];
      const int offset = multi[static_cast<std::size_t>(a)] - (r - 1) / 2;
      p[a] = spec.center[a] + offset * spec.spacing(a);
    }
    nodes.push_back(p);
  }
  return nodes;
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::target: return "target";
    case Outcome::other_solution: return "other-solution";
    case Outcome::diverged: return "diverged";
    case Outcome::unresolvable: return "unresolvable";
  }
  return "unknown";
}

Solver make_solver(SolverKind kind, SolverConfig cfg) {
  cfg.validate();
  return [kind, cfg](const NonlinearSystem& sys, const Vector& x0) {
    return solve(kind, sys, x0, cfg);
  };
}

StartBuilder embed_start(const GridSpec& spec, Vector base_state) {
  return [dims = spec.swept_dims, base = std::move(base_state)](const Vector& p) {
    Vector x = base;
    for (std::size_t a = 0; a < dims.size(); ++a) x[dims[a]] = p[static_cast<Index>(a)];
    return std::optional<Vector>(x);
  };
}

PointRecord classify_point(const Solver& solver, const NonlinearSystem& sys,
                           const std::optional<Vector>& x0_full, const Vector& target,
                           double tolerance) {
  PointRecord rec;
  if (!x0_full) return rec;
  try {
    const SolverResult r = solver(sys, *x0_full);
    rec.iterations = r.iterations;
    rec.residual = r.residual_norm;
    if (r.converged()) {
      rec.outcome = (r.solution - target).norm() <= tolerance ? Outcome::target
                                                               : Outcome::other_solution;
    } else {
      rec.outcome = Outcome::diverged;
    }
  } catch (const std::exception&) {
    rec.outcome = Outcome::diverged;
    rec.residual = std::numeric_limits<double>::quiet_NaN();
  }
  return rec;
}

RegionMap map_region(const Solver& solver, const NonlinearSystem& sys, const GridSpec& spec,
                     const StartBuilder& start, const Vector& target, double tolerance,
                     int threads) {
  spec.validate();
  if (target.size() != sys.dimension()) throw InputError("target has wrong dimension");
  for (Index dim : spec.swept_dims) {
    if (dim < 0 || dim >= sys.dimension()) throw InputError("swept dimension out of range");
  }
  const auto nodes = generate_grid(spec);
  RegionMap map{spec, std::vector<PointRecord>(nodes.size()), target, tolerance};

  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < nodes.size(); i = next++) {
      std::optional<Vector> x0;
      try {
        x0 = start(nodes[i]);
      } catch (const std::exception&) {
        x0.reset();
      }
      map.outcomes[i] = classify_point(solver, sys, x0, target, tolerance);
    }
  };
  const int workers = std::max(1, threads);
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
  }
  return map;
}

RegionStats connected_stats(const RegionMap& map) {
  RegionStats stats;
  const auto& spec = map.spec;
  for (const auto& rec : map.outcomes) {
    if (rec.outcome == Outcome::target) ++stats.total_target_points;
    if (rec.outcome == Outcome::unresolvable) ++stats.unresolvable_points;
  }
  if (stats.total_target_points == 0) {
    stats.no_target_points = true;
    return stats;
  }
  Vector target_coords(spec.axes());
  for (Index a = 0; a < spec.axes(); ++a) {
    target_coords[a] = map.target[spec.swept_dims[static_cast<std::size_t>(a)]];
  }
  const Index seed = spec.nearest_node(target_coords);
  const auto is_target = [&map](Index node) {
    return map.outcomes[static_cast<std::size_t>(node)].outcome == Outcome::target;
  };
  if (is_target(seed)) {
    std::vector<char> seen(map.outcomes.size(), 0);
    std::deque<Index> queue{seed};
    seen[static_cast<std::size_t>(seed)] = 1;
    while (!queue.empty()) {
      const Index node = queue.front();
      queue.pop_front();
      ++stats.inside_connected;
      auto multi = spec.unflatten(node);
      for (std::size_t a = 0; a < multi.size(); ++a) {
        for (int step : {-1, 1}) {
          const int k = multi[a] + step;
          if (k < 0 || k >= spec.resolution[a]) continue;
          auto neighbor = multi;
          neighbor[a] = k;
          const Index idx = spec.flatten(neighbor);
          if (!seen[static_cast<std::size_t>(idx)] && is_target(idx)) {
            seen[static_cast<std::size_t>(idx)] = 1;
            queue.push_back(idx);
          }
        }
      }
    }
  }
  stats.outside_connected = stats.total_target_points - stats.inside_connected;
  return stats;
}

void write_csv(const RegionMap& map, std::ostream& out) {
  const auto nodes = generate_grid(map.spec);
  for (Index a = 0; a < map.spec.axes(); ++a) out << "coord_" << a << ',';
  out << "outcome,iterations,residual\n";
  char buf[32];
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (Index a = 0; a < nodes[i].size(); ++a) {
      std::snprintf(buf, sizeof buf, "%.17g", nodes[i][a]);
      out << buf << ',';
    }
    const auto& rec = map.outcomes[i];
    std::snprintf(buf, sizeof buf, "%.17g", rec.residual);
    out << to_string(rec.outcome) << ',' << rec.iterations << ',' << buf << '\n';
  }
}

nlohmann::json stats_to_json(const RegionStats& stats) {
  return {{"total_target_points", stats.total_target_points},
          {"inside_connected", stats.inside_connected},
          {"outside_connected", stats.outside_connected},
          {"unresolvable_points", stats.unresolvable_points},
          {"no_target_points", stats.no_target_points}};
}

}  // namespace uep::region
