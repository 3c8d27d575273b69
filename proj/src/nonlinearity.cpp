#include "kirchhoff/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "kirchhoff/errors.hpp"

namespace kirchhoff {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr int kMaxSimpsonDepth = 60;
constexpr std::size_t kMaxSimpsonEvaluations = 4'000'000;

// Piecewise-linear interpolation, constant beyond the last knot.
double tabulated_value(const Nonlinearity::Tabulated& tab, double sigma) {
  const auto& x = tab.sigma;
  const auto& y = tab.values;
  if (sigma >= x.back()) return y.back();
  const auto it = std::upper_bound(x.begin(), x.end(), sigma);
  const std::size_t j = static_cast<std::size_t>(it - x.begin()) - 1;
  const double w = (sigma - x[j]) / (x[j + 1] - x[j]);
  return y[j] + w * (y[j + 1] - y[j]);
}

// Exact integral of the interpolant over [a, b], 0 ≤ a ≤ b.
double tabulated_integral(const Nonlinearity::Tabulated& tab, double a, double b) {
  const auto& x = tab.sigma;
  double total = 0.0;
  double lo = a;
  while (lo < b) {
    double hi = b;
    const auto it = std::upper_bound(x.begin(), x.end(), lo);
    if (it != x.end()) hi = std::min(hi, *it);
    total += 0.5 * (hi - lo) * (tabulated_value(tab, lo) + tabulated_value(tab, hi));
    lo = hi;
  }
  return total;
}

struct SimpsonFailure {};

template <class F>
double simpson_step(const F& f, double a, double b, double fa, double fm, double fb, double whole,
                    double tol, int depth, std::size_t& evals) {
  evals += 2;
  if (evals > kMaxSimpsonEvaluations) throw SimpsonFailure{};
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(left + right);
  if (!std::isfinite(delta)) throw SimpsonFailure{};
  if (std::abs(delta) <= std::max(15.0 * tol, floor)) return left + right + delta / 15.0;
  if (depth >= kMaxSimpsonDepth) throw SimpsonFailure{};
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, evals) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, evals);
}

void require_hyperbolic(double mu1, double sigma_max) {
  if (!(mu1 > 0.0)) {
    throw HyperbolicityViolation("m attains " + std::to_string(mu1) + " <= 0 on [0, " +
                                 std::to_string(sigma_max) + "]");
  }
}

}  // namespace

Nonlinearity Nonlinearity::constant(double value) {
  if (!std::isfinite(value)) throw InvalidInput("constant nonlinearity must be finite");
  return Nonlinearity(Constant{value});
}

Nonlinearity Nonlinearity::affine(double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b)) throw InvalidInput("affine parameters must be finite");
  return Nonlinearity(Affine{a, b});
}

Nonlinearity Nonlinearity::sine(double base, double amplitude, double frequency) {
  if (!std::isfinite(base) || !std::isfinite(amplitude) || !(frequency > 0.0) ||
      !std::isfinite(frequency)) {
    throw InvalidInput("sine nonlinearity needs finite base/amplitude and frequency > 0");
  }
  return Nonlinearity(Sine{base, amplitude, frequency});
}

Nonlinearity Nonlinearity::tabulated(std::vector<double> sigma, std::vector<double> values) {
  if (sigma.size() < 2 || sigma.size() != values.size()) {
    throw InvalidInput("tabulated nonlinearity needs >= 2 knots with matching values");
  }
  if (sigma.front() != 0.0) throw InvalidInput("tabulated nonlinearity must start at sigma = 0");
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (!std::isfinite(sigma[i]) || !std::isfinite(values[i])) {
      throw InvalidInput("tabulated nonlinearity has a non-finite entry");
    }
    if (i > 0 && !(sigma[i] > sigma[i - 1])) {
      throw InvalidInput("tabulated knots must be strictly increasing");
    }
  }
  return Nonlinearity(Tabulated{std::move(sigma), std::move(values)});
}

Nonlinearity Nonlinearity::custom(std::string name, std::function<double(double)> m) {
  if (!m) throw InvalidInput("custom nonlinearity needs a callable");
  return Nonlinearity(Custom{std::move(name), std::move(m)});
}

Nonlinearity::Kind Nonlinearity::kind() const noexcept {
  return static_cast<Kind>(profile_.index());
}

std::string Nonlinearity::kind_name() const {
  switch (kind()) {
    case Kind::constant: return "constant";
    case Kind::affine: return "affine";
    case Kind::sine: return "sine";
    case Kind::tabulated: return "tabulated";
    case Kind::custom: return "custom";
  }
  return "unknown";
}

double Nonlinearity::m(double sigma) const {
  return std::visit(overloaded{
                        [](const Constant& c) { return c.value; },
                        [&](const Affine& a) { return a.a + a.b * sigma; },
                        [&](const Sine& s) {
                          return s.base + s.amplitude * std::sin(s.frequency * sigma);
                        },
                        [&](const Tabulated& t) { return tabulated_value(t, sigma); },
                        [&](const Custom& c) { return c.m(sigma); },
                    },
                    profile_);
}

bool Nonlinearity::has_closed_form_primitive() const noexcept { return kind() != Kind::custom; }

double Nonlinearity::M(double sigma) const {
  if (sigma == 0.0) return 0.0;
  return M_increment(0.0, sigma);
}

double Nonlinearity::M_increment(double base, double h) const {
  if (h == 0.0) return 0.0;
  return std::visit(
      overloaded{
          [&](const Constant& c) { return c.value * h; },
          [&](const Affine& a) { return h * (a.a + a.b * (base + 0.5 * h)); },
          [&](const Sine& s) {
            // cos(ωx) − cos(ω(x+h)) = 2 sin(ω(x + h/2)) sin(ωh/2)
            const double w = s.frequency;
            return s.base * h +
                   2.0 * s.amplitude / w * std::sin(w * (base + 0.5 * h)) * std::sin(0.5 * w * h);
          },
          [&](const Tabulated& t) { return tabulated_integral(t, base, base + h); },
          [&](const Custom&) { return integrate_m(*this, base, base + h); },
      },
      profile_);
}

Nonlinearity Nonlinearity::with_bounds(const ConstantBounds& bounds) const {
  Nonlinearity out = *this;
  out.bounds_ = bounds;
  return out;
}

bool Nonlinearity::in_working_range(double sigma) const noexcept {
  return !bounds_ || (sigma >= 0.0 && sigma <= bounds_->sigma_max);
}

MValue eval_m(const Nonlinearity& nl, double sigma) {
  if (!(sigma >= 0.0)) throw InvalidInput("eval_m: sigma must be >= 0");
  return {nl.m(sigma), !nl.in_working_range(sigma)};
}

double eval_M(const Nonlinearity& nl, double sigma) {
  if (!(sigma >= 0.0)) throw InvalidInput("eval_M: sigma must be >= 0");
  return nl.M(sigma);
}

double integrate_m(const Nonlinearity& nl, double a, double b, double tol) {
  if (!(b >= a)) throw InvalidInput("integrate_m: needs a <= b");
  if (a == b) return 0.0;
  const auto f = [&nl](double s) { return nl.m(s); };
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  try {
    std::size_t evals = 3;
    return simpson_step(f, a, b, fa, fm, fb, whole, tol, 0, evals);
  } catch (const SimpsonFailure&) {
    throw NumericalFailure("adaptive Simpson for M did not converge on [" + std::to_string(a) +
                           ", " + std::to_string(b) + "]");
  }
}

ConstantBounds certify_constants(const Nonlinearity& nl, double sigma_max, std::size_t samples) {
  if (!(sigma_max > 0.0) || !std::isfinite(sigma_max)) {
    throw InvalidInput("certify_constants: sigma_max must be positive and finite");
  }
  ConstantBounds b;
  b.sigma_max = sigma_max;
  using K = Nonlinearity::Kind;
  switch (nl.kind()) {
    case K::constant: {
      const double c = std::get<Nonlinearity::Constant>(nl.profile()).value;
      b.mu1 = b.mu2 = c;
      b.lip = 0.0;
      break;
    }
    case K::affine: {
      const auto& a = std::get<Nonlinearity::Affine>(nl.profile());
      const double end = a.a + a.b * sigma_max;
      b.mu1 = std::min(a.a, end);
      b.mu2 = std::max(a.a, end);
      b.lip = std::abs(a.b);
      break;
    }
    case K::sine: {
      const auto& s = std::get<Nonlinearity::Sine>(nl.profile());
      const double theta = s.frequency * sigma_max;
      const double pi = std::numbers::pi;
      const double smin = theta >= 1.5 * pi ? -1.0 : std::min(0.0, std::sin(theta));
      const double smax = theta >= 0.5 * pi ? 1.0 : std::sin(theta);
      const double lo = s.base + s.amplitude * (s.amplitude >= 0.0 ? smin : smax);
      const double hi = s.base + s.amplitude * (s.amplitude >= 0.0 ? smax : smin);
      b.mu1 = lo;
      b.mu2 = hi;
      b.lip = std::abs(s.amplitude) * s.frequency;
      break;
    }
    case K::tabulated:
    case K::custom: {
      if (samples < 2) throw InvalidInput("certify_constants: needs at least 2 samples");
      b.approximate = true;
      double prev = nl.m(0.0);
      b.mu1 = b.mu2 = prev;
      const double step = sigma_max / static_cast<double>(samples);
      for (std::size_t j = 1; j <= samples; ++j) {
        const double x = j == samples ? sigma_max : step * static_cast<double>(j);
        const double v = nl.m(x);
        if (!std::isfinite(v)) throw NumericalFailure("m is not finite at sigma = " + std::to_string(x));
        b.mu1 = std::min(b.mu1, v);
        b.mu2 = std::max(b.mu2, v);
        b.lip = std::max(b.lip, std::abs(v - prev) / step);
        prev = v;
      }
      break;
    }
  }
  require_hyperbolic(b.mu1, sigma_max);
  return b;
}

double compute_H0(const SpectralOperator& op, const Nonlinearity& nl, const DataSpec& data) {
  if (data.size() > op.size()) {
    throw InvalidInput("compute_H0: data has " + std::to_string(data.size()) +
                       " modes but the operator only " + std::to_string(op.size()));
  }
  const double kinetic = norm_sq(data.u1);
  const double seminorm = half_norm_sq(op, data.u0);
  const double bound = data.tail_bound.at(data.size());
  if (bound == 0.0) return kinetic + nl.M(seminorm);
  // The unstored part splits between |u₁|² and |A^{1/2}u₀|² in an unknown way;
  // charging the whole bound to both sides keeps this an upper bound.
  return kinetic + bound + nl.M(seminorm + bound);
}

ConstantBounds certify_for_data(const SpectralOperator& op, const Nonlinearity& nl,
                                const DataSpec& data) {
  const double H0 = compute_H0(op, nl, data);
  if (H0 == 0.0) return certify_constants(nl, 1.0);
  double mu = nl.m(0.0);
  require_hyperbolic(mu, 0.0);
  for (int iter = 0; iter < 100; ++iter) {
    const double sigma_max = (1.0 + kWorkingRangeSlack) * H0 / mu;
    const ConstantBounds b = certify_constants(nl, sigma_max);
    if (b.mu1 >= mu) return b;
    mu = b.mu1;
  }
  throw NumericalFailure("working range for the a-priori bound did not stabilise");
}

DerivedConstants derive_constants(const ConstantBounds& bounds, double H0) {
  DerivedConstants d;
  d.nu1 = std::min(1.0, bounds.mu1);
  d.nu2 = std::max(1.0, bounds.mu2);
  d.H0 = H0;
  d.L1 = H0 / d.nu1;
  return d;
}

}  // namespace kirchhoff
