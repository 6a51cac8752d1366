#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace uep {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Malformed or inconsistent input (wrong dimension, invalid case data, bad config).
class InputError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A residual or Jacobian evaluation produced non-finite values.
class EvaluationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A linear system inside a solver could not be solved reliably.
class LinearSolveError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }
inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace uep
