#pragma once

// Independent reference computations used by the tests. Nothing here calls the
// library's own summation, log-space or quadrature code.

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

namespace oracle {

// Σ_{i>k} (u1_i² + λ_i² u0_i²) by a plain long double loop.
inline long double tail(const std::vector<double>& lambda, const std::vector<double>& u0,
                        const std::vector<double>& u1, std::size_t k) {
  long double s = 0.0L;
  for (std::size_t i = k; i < u0.size(); ++i) {
    const long double a = u1[i];
    const long double b = static_cast<long double>(lambda[i]) * u0[i];
    s += a * a + b * b;
  }
  return s;
}

// R_k · α k^p · exp(β k^q λ_k) ≤ 1 by direct product; nullopt when the
// weight overflows double precision.
inline std::optional<bool> certified(const std::vector<double>& lambda, const std::vector<double>& u0,
                                     const std::vector<double>& u1, std::size_t k, double a = 1.0,
                                     double p = 2.0, double b = 1.0, double q = 1.0) {
  const double kd = static_cast<double>(k);
  const double weight = a * std::pow(kd, p) * std::exp(b * std::pow(kd, q) * lambda[k - 1]);
  if (!std::isfinite(weight)) return std::nullopt;
  return tail(lambda, u0, u1, k) * static_cast<long double>(weight) <= 1.0L;
}

// Linear wave mode: v(0) cos λt + v'(0) sin(λt)/λ.
inline double linear_position(double v0, double w0, double lambda, double t) {
  return v0 * std::cos(lambda * t) + w0 * std::sin(lambda * t) / lambda;
}
inline double linear_velocity(double v0, double w0, double lambda, double t) {
  return -v0 * lambda * std::sin(lambda * t) + w0 * std::cos(lambda * t);
}

// Composite Simpson with an even number of panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int panels = 20000) {
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int j = 1; j < panels; ++j) s += (j % 2 ? 4.0 : 2.0) * f(a + j * h);
  return s * h / 3.0;
}

}  // namespace oracle
