#include "uep/builtin_systems.hpp"

#include <cmath>
#include <random>

namespace uep::builtin {

NonlinearSystem identity() {
  return NonlinearSystem(
      "identity", 1, [](const Vector& x) -> Vector { return x; },
      [](const Vector&) -> Matrix { return Matrix::Identity(1, 1); });
}

NonlinearSystem quadratic() {
  return NonlinearSystem(
      "quadratic", 1,
      [](const Vector& x) -> Vector { return Vector::Constant(1, x[0] * x[0] - 4.0); },
      [](const Vector& x) -> Matrix { return Matrix::Constant(1, 1, 2.0 * x[0]); });
}

NonlinearSystem pendulum(double damping) {
  return NonlinearSystem(
      "pendulum", 2,
      [damping](const Vector& x) -> Vector {
        Vector f(2);
        f << x[1], -std::sin(x[0]) - damping * x[1];
        return f;
      },
      [damping](const Vector& x) -> Matrix {
        Matrix j(2, 2);
        j << 0.0, 1.0, -std::cos(x[0]), -damping;
        return j;
      });
}

NonlinearSystem type2() {
  return NonlinearSystem(
      "type2", 2,
      [](const Vector& x) -> Vector {
        Vector f(2);
        f << x[0], 1.0;
        return f;
      },
      [](const Vector&) -> Matrix {
        Matrix j = Matrix::Zero(2, 2);
        j(0, 0) = 1.0;
        return j;
      });
}

NonlinearSystem type3() {
  return NonlinearSystem(
      "type3", 1, [](const Vector& x) -> Vector { return Vector::Constant(1, x[0] * x[0]); },
      [](const Vector& x) -> Matrix { return Matrix::Constant(1, 1, 2.0 * x[0]); });
}

NonlinearSystem random_polynomial(Index n, std::uint64_t seed) {
  if (n <= 0) throw InputError("randpoly dimension must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Matrix a(n, n), b(n, n);
  Vector c(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      a(i, j) = (i == j ? 2.0 : 0.0) + 0.5 * unit(rng);
      b(i, j) = 0.3 * unit(rng);
    }
    c[i] = unit(rng);
  }
  return NonlinearSystem(
      "randpoly:" + std::to_string(n) + ":" + std::to_string(seed), n,
      [a, b, c](const Vector& x) -> Vector {
        return c + a * x + b * x.cwiseProduct(x);
      },
      [a, b](const Vector& x) -> Matrix {
        return a + 2.0 * b * x.asDiagonal();
      });
}

NonlinearSystem by_name(const std::string& name) {
  if (name == "identity") return identity();
  if (name == "quadratic") return quadratic();
  if (name == "pendulum") return pendulum();
  if (name == "type2") return type2();
  if (name == "type3") return type3();
  if (name.rfind("randpoly:", 0) == 0) {
    const auto rest = name.substr(9);
    const auto colon = rest.find(':');
    if (colon == std::string::npos) throw InputError("randpoly expects randpoly:<n>:<seed>");
    try {
      const long n = std::stol(rest.substr(0, colon));
      const unsigned long long seed = std::stoull(rest.substr(colon + 1));
      return random_polynomial(n, seed);
    } catch (const std::logic_error&) {
      throw InputError("randpoly expects randpoly:<n>:<seed>, got '" + name + "'");
    }
  }
  throw InputError("unknown builtin system '" + name + "'");
}

std::vector<std::string> names() {
  return {"identity", "quadratic", "pendulum", "type2", "type3"};
}

}  // namespace uep::builtin
