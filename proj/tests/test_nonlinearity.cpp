#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "kirchhoff/errors.hpp"
#include "kirchhoff/lacunary.hpp"
#include "kirchhoff/nonlinearity.hpp"
#include "oracles.hpp"

using namespace kirchhoff;

TEST_CASE("eval_m examples") {
  CHECK(eval_m(Nonlinearity::constant(1.0), 7.3).value == 1.0);
  CHECK(eval_m(Nonlinearity::affine(1.0, 1.0), 2.0).value == 3.0);
  CHECK(eval_m(Nonlinearity::affine(2.0, 3.0), 0.0).value == 2.0);
  CHECK_THROWS_AS(eval_m(Nonlinearity::constant(1.0), -1e-300), InvalidInput);
  CHECK_THROWS_AS(eval_M(Nonlinearity::constant(1.0), -1.0), InvalidInput);
}

TEST_CASE("range flag outside the working range") {
  const auto nl = Nonlinearity::affine(1.0, 1.0);
  CHECK_FALSE(eval_m(nl, 100.0).out_of_range);  // no bounds attached yet
  const auto bounded = nl.with_bounds(certify_constants(nl, 2.0));
  CHECK_FALSE(eval_m(bounded, 2.0).out_of_range);
  const auto far = eval_m(bounded, 2.5);
  CHECK(far.out_of_range);
  CHECK(far.value == 3.5);
}

TEST_CASE("eval_M examples") {
  for (const auto& nl : {Nonlinearity::constant(3.0), Nonlinearity::affine(1, 2),
                         Nonlinearity::sine(2, 0.5, 3), Nonlinearity::tabulated({0, 1}, {1, 2})}) {
    CHECK(eval_M(nl, 0.0) == 0.0);
  }
  CHECK(eval_M(Nonlinearity::constant(1.0), 5.0) == 5.0);
  const auto affine = Nonlinearity::affine(1.0, 1.0);
  CHECK(eval_M(affine, 2.0) == 4.0);
  const double quad = oracle::simpson([](double s) { return 1.0 + s; }, 0.0, 2.0);
  CHECK(std::abs(eval_M(affine, 2.0) - quad) <= 1e-12);
}

TEST_CASE("quadrature agrees with closed forms") {
  const auto affine = Nonlinearity::affine(0.7, 1.3);
  const auto custom_affine = Nonlinearity::custom("affine", [](double s) { return 0.7 + 1.3 * s; });
  const auto sine = Nonlinearity::sine(2.0, 0.75, 4.0);
  const auto custom_sine =
      Nonlinearity::custom("sine", [](double s) { return 2.0 + 0.75 * std::sin(4.0 * s); });
  CHECK_FALSE(custom_sine.has_closed_form_primitive());
  for (int j = 0; j <= 200; ++j) {
    const double s = 0.05 * j;
    CHECK(std::abs(eval_M(custom_affine, s) - eval_M(affine, s)) <= 1e-10);
    CHECK(std::abs(eval_M(custom_sine, s) - eval_M(sine, s)) <= 1e-10);
  }
}

TEST_CASE("M_increment matches the difference of primitives") {
  const auto nls = {Nonlinearity::affine(1, 1), Nonlinearity::sine(2, 0.5, 3),
                    Nonlinearity::tabulated({0, 0.5, 2}, {1, 3, 2}),
                    Nonlinearity::custom("c", [](double s) { return 1.0 + s * s; })};
  for (const auto& nl : nls) {
    for (double base : {0.0, 0.3, 1.7}) {
      for (double h : {0.0, 1e-9, 0.4, 2.5}) {
        CHECK(nl.M_increment(base, h) == doctest::Approx(nl.M(base + h) - nl.M(base)).epsilon(1e-9));
      }
    }
  }
  // tiny increments keep full relative accuracy
  const auto nl = Nonlinearity::affine(1, 1);
  CHECK(nl.M_increment(1.0, 1e-30) == doctest::Approx(2e-30).epsilon(1e-15));
}

TEST_CASE("certify_constants examples") {
  const auto c = certify_constants(Nonlinearity::constant(1.0), 10.0);
  CHECK(c.mu1 == 1.0);
  CHECK(c.mu2 == 1.0);
  CHECK(c.lip == 0.0);
  CHECK_FALSE(c.approximate);

  const auto a = certify_constants(Nonlinearity::affine(1.0, 1.0), 3.0);
  const auto m = [](double s) { return 1.0 + s; };
  CHECK(a.mu1 == std::min(m(0.0), m(3.0)));
  CHECK(a.mu2 == std::max(m(0.0), m(3.0)));
  CHECK(a.lip == doctest::Approx((m(3.0) - m(0.0)) / 3.0));
  CHECK_FALSE(a.approximate);

  CHECK_THROWS_AS(certify_constants(Nonlinearity::constant(1.0), 0.0), InvalidInput);
}

TEST_CASE("sine profile against dense sampling") {
  const double pi = std::numbers::pi;
  const auto f = [](double s) { return 2.0 + std::sin(s); };
  double lo = INFINITY, hi = -INFINITY, lip = 0.0;
  const int dense = 1000000;
  double prev = f(0.0);
  for (int j = 0; j <= dense; ++j) {
    const double s = pi * j / dense;
    const double v = f(s);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    if (j > 0) lip = std::max(lip, std::abs(v - prev) / (pi / dense));
    prev = v;
  }
  const auto exact = certify_constants(Nonlinearity::sine(2.0, 1.0, 1.0), pi);
  CHECK(exact.mu1 == doctest::Approx(lo).epsilon(1e-12));
  CHECK(exact.mu2 == doctest::Approx(hi).epsilon(1e-12));
  CHECK(exact.lip >= lip - 1e-9);
  CHECK(exact.lip == doctest::Approx(1.0));

  std::vector<double> knots, values;
  for (int j = 0; j <= 2000; ++j) {
    knots.push_back(pi * j / 2000);
    values.push_back(f(knots.back()));
  }
  const auto sampled = certify_constants(Nonlinearity::tabulated(knots, values), pi);
  CHECK(sampled.approximate);
  CHECK(sampled.mu1 == doctest::Approx(lo).epsilon(1e-6));
  CHECK(sampled.mu2 == doctest::Approx(hi).epsilon(1e-6));
  CHECK(sampled.lip == doctest::Approx(lip).epsilon(1e-3));
}

TEST_CASE("strict hyperbolicity is enforced") {
  CHECK_THROWS_AS(certify_constants(Nonlinearity::constant(0.0), 1.0), HyperbolicityViolation);
  CHECK_THROWS_AS(certify_constants(Nonlinearity::affine(1.0, -1.0), 2.0), HyperbolicityViolation);
  CHECK_THROWS_AS(certify_constants(Nonlinearity::sine(0.5, 1.0, 1.0), 10.0), HyperbolicityViolation);
  CHECK_NOTHROW(certify_constants(Nonlinearity::affine(1.0, -1.0), 0.5));
}

TEST_CASE("compute_H0 examples") {
  const auto op1 = SpectralOperator::laplacian_1d(3);
  CHECK(compute_H0(op1, Nonlinearity::affine(1, 1), DataSpec::from_coefficients({0, 0, 0}, {0, 0, 0})) == 0.0);
  CHECK(compute_H0(SpectralOperator({1.0}), Nonlinearity::constant(1.0),
                   DataSpec::from_coefficients({1.0}, {0.0})) == 1.0);
  // |A^{1/2}u0|² = 2, |u1|² = 1
  const SpectralOperator op2({1.0, 1.0});
  const auto data = DataSpec::from_coefficients({1.0, 1.0}, {1.0, 0.0});
  const double expected = 1.0 + (2.0 + 2.0 * 2.0 / 2.0);
  CHECK(compute_H0(op2, Nonlinearity::affine(1, 1), data) == expected);
  CHECK(expected == 5.0);
}

TEST_CASE("tail bound enters H0 as an upper bound") {
  const auto op = SpectralOperator::laplacian_1d(4);
  const auto nl = Nonlinearity::affine(1, 1);
  auto data = DataSpec::from_coefficients({0.5, 0.0}, {0.1, 0.0});
  const double finite = compute_H0(op, nl, data);
  data.tail_bound = TailBound::geometric(1e-3, 0.5);
  CHECK(compute_H0(op, nl, data) > finite);
}

TEST_CASE("derived constants") {
  const auto op = SpectralOperator::laplacian_1d(8);
  const auto data = random_coefficients(op, 8, 11, 0.3);
  for (const auto& nl : {Nonlinearity::constant(0.4), Nonlinearity::constant(3.0), Nonlinearity::affine(0.5, 2.0),
                         Nonlinearity::sine(1.5, 0.5, 2.0)}) {
    const auto b = certify_for_data(op, nl, data);
    const double H0 = compute_H0(op, nl, data);
    const auto d = derive_constants(b, H0);
    CHECK(d.nu1 <= 1.0);
    CHECK(d.nu2 >= 1.0);
    CHECK(d.nu1 == std::min(1.0, b.mu1));
    CHECK(d.nu2 == std::max(1.0, b.mu2));
    CHECK(d.H0 == H0);
    CHECK(d.L1 == H0 / d.nu1);
    // the certified range covers the a-priori ball with 10% headroom
    CHECK(b.sigma_max >= (1.0 + kWorkingRangeSlack) * H0 / b.mu1 * (1 - 1e-12));
  }
}

TEST_CASE("M dominates mu1 sigma and m is L-Lipschitz on the working range") {
  const auto op = SpectralOperator::laplacian_1d(6);
  const auto data = random_coefficients(op, 6, 5, 0.5);
  const auto nls = {Nonlinearity::affine(1.0, 1.0), Nonlinearity::sine(2.0, 0.8, 5.0),
                    Nonlinearity::tabulated({0.0, 0.5, 1.0, 3.0}, {1.0, 1.5, 1.2, 4.0}),
                    Nonlinearity::constant(2.5)};
  for (const auto& nl : nls) {
    const auto b = certify_for_data(op, nl, data);
    double prevM = -1.0;
    for (int j = 0; j <= 1000; ++j) {
      const double s = b.sigma_max * j / 1000.0;
      const double M = eval_M(nl, s);
      CHECK(M >= b.mu1 * s - 1e-10);
      CHECK(M >= prevM);
      prevM = M;
    }
    PortableRng rng(17);
    for (int j = 0; j < 1000; ++j) {
      const double s1 = rng.uniform(0.0, b.sigma_max);
      const double s2 = rng.uniform(0.0, b.sigma_max);
      CHECK(std::abs(eval_m(nl, s2).value - eval_m(nl, s1).value) <= b.lip * std::abs(s2 - s1) + 1e-10);
    }
  }
}

TEST_CASE("integrate_m reports non-convergence") {
  const auto wild = Nonlinearity::custom("wild", [](double s) { return 2.0 + std::sin(1.0 / (s + 1e-300)); });
  CHECK_THROWS_AS(integrate_m(wild, 0.0, 1.0, 1e-14), NumericalFailure);
}

TEST_CASE("tabulated validation") {
  CHECK_THROWS_AS(Nonlinearity::tabulated({0.0}, {1.0}), InvalidInput);
  CHECK_THROWS_AS(Nonlinearity::tabulated({0.5, 1.0}, {1.0, 1.0}), InvalidInput);
  CHECK_THROWS_AS(Nonlinearity::tabulated({0.0, 0.0}, {1.0, 1.0}), InvalidInput);
  const auto t = Nonlinearity::tabulated({0.0, 1.0}, {1.0, 3.0});
  CHECK(t.m(0.5) == 2.0);
  CHECK(t.m(5.0) == 3.0);  // constant beyond the last knot
  CHECK(t.M(1.0) == 2.0);
  CHECK(t.M(2.0) == 5.0);
}
