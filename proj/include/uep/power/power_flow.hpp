#pragma once

#include "uep/power/network.hpp"

#include <stdexcept>
#include <vector>

namespace uep::power {

class PowerFlowError : public std::runtime_error {
public:
  PowerFlowError(const std::string& what, std::vector<double> mismatch_trace)
      : std::runtime_error(what), trace_(std::move(mismatch_trace)) {}
  const std::vector<double>& mismatch_trace() const { return trace_; }

private:
  std::vector<double> trace_;
};

struct PowerFlowOptions {
  double tolerance = 1e-11;  // max-norm of the power mismatch, p.u.
  int max_iterations = 30;
};

/// Pre-fault stable equilibrium: converged power flow plus classical machine
/// internals, with Pm set to each machine's electrical output.
struct SepSolution {
  Vector v;       // bus voltage magnitudes
  Vector theta;   // bus angles, slack frame (rad)
  Vector p_gen;   // per machine
  Vector q_gen;
  Vector eq_prime;
  Vector delta;   // machine internal angles, slack frame
  Vector pm;
  Vector inertia;
  double delta_coi = 0.0;  // center-of-inertia angle in the slack frame
  /// COI-frame state (reduced machine angles, bus angles, bus voltages) of the
  /// pre-fault structure-preserving system.
  Vector state;
  int iterations = 0;
  double max_mismatch = 0.0;
  std::vector<double> mismatch_trace;
};

SepSolution power_flow_sep(const PowerCase& c, const PowerFlowOptions& opts = {});

/// Complex power injections V * conj(Y V).
CVector power_injections(const CMatrix& ybus, const Vector& v, const Vector& theta);

}  // namespace uep::power
