#include "uep/solvers.hpp"

#include <algorithm>
#include <cmath>

namespace uep {

StepController::StepController(StepRule rule, double h0, double h_max,
                               double initial_residual_norm)
    : rule_(rule), h_(h0), h_max_(h_max), previous_(initial_residual_norm) {
  if (!(h0 > 0.0) || !std::isfinite(h0)) throw InputError("h0 must be positive and finite");
  if (!(h_max >= h0)) throw InputError("h_max must be >= h0");
  if (!(initial_residual_norm >= 0.0)) throw InputError("residual norm must be non-negative");
}

void StepController::set(double h) {
  // Keep h finite and positive; an infinite cap still leaves h representable.
  h = std::min(h, h_max_);
  h = std::min(h, std::numeric_limits<double>::max());
  if (h > 0.0) h_ = h;
}

void StepController::ser_update(double current_residual_norm) {
  if (!(current_residual_norm > 0.0)) {
    throw InputError("SER update needs a positive residual norm");
  }
  set(h_ * (previous_ / current_residual_norm));
  previous_ = current_residual_norm;
}

void StepController::step_norm_update(double step_norm) {
  if (step_norm > 0.0 && std::isfinite(step_norm)) set(h_ * step_norm);
}

}  // namespace uep
