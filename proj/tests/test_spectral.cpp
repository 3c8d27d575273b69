#include <doctest.h>

#include <cmath>
#include <vector>

#include "kirchhoff/errors.hpp"
#include "kirchhoff/lacunary.hpp"
#include "kirchhoff/spectral.hpp"

using namespace kirchhoff;

namespace {

GalerkinState make_state(std::vector<double> pos, std::vector<double> vel, double t = 0.0) {
  GalerkinState s;
  s.t = t;
  s.position = std::move(pos);
  s.velocity = std::move(vel);
  return s;
}

GalerkinState random_state(std::size_t n, std::uint64_t seed) {
  PortableRng rng(seed);
  GalerkinState s;
  for (std::size_t i = 0; i < n; ++i) {
    s.position.push_back(rng.uniform(-1, 1));
    s.velocity.push_back(rng.uniform(-1, 1));
  }
  return s;
}

}  // namespace

TEST_CASE("operator construction") {
  CHECK_THROWS_AS(SpectralOperator(std::vector<double>{}), InvalidInput);
  CHECK_THROWS_AS(SpectralOperator({0.0, 1.0}), InvalidInput);
  CHECK_THROWS_AS(SpectralOperator({2.0, 1.0}), InvalidInput);
  CHECK_THROWS_AS(SpectralOperator({1.0, NAN}), InvalidInput);
  CHECK_NOTHROW(SpectralOperator({1.0, 1.0, 2.0}));

  const auto lap = SpectralOperator::laplacian_1d(5);
  CHECK(lap.size() == 5);
  CHECK(lap.lambda_at(1) == 1.0);
  CHECK(lap.lambda_at(5) == 5.0);
  CHECK_THROWS_AS(lap.lambda_at(0), InvalidInput);
  CHECK_THROWS_AS(lap.lambda_at(6), InvalidInput);

  CHECK(SpectralOperator::power(4, 2.0).lambda_at(3) == doctest::Approx(9.0));
  CHECK(SpectralOperator::geometric(4, 2.0).lambda_at(4) == doctest::Approx(16.0));
  CHECK_THROWS_AS(SpectralOperator::geometric(4, 1.0), InvalidInput);
  CHECK_THROWS_AS(SpectralOperator::power(4, 0.0), InvalidInput);
}

TEST_CASE("half_norm_sq examples") {
  const SpectralOperator op({1.0, 2.0, 3.0});
  CHECK(half_norm_sq(op, std::vector<double>{0, 0, 0}) == 0.0);
  CHECK(half_norm_sq(op, std::vector<double>{1, 0, 0}) == 1.0);
  CHECK(half_norm_sq(op, std::vector<double>{1, 1, 1}) == 14.0);
  CHECK_THROWS_AS(half_norm_sq(op, std::vector<double>{1, 1, 1, 1}), InvalidInput);
  // the high part of a split is offset by first_mode
  CHECK(half_norm_sq(op, std::vector<double>{1, 1}, 2) == 13.0);
}

TEST_CASE("energy_pair examples") {
  {
    const SpectralOperator op({1.0});
    const auto e = energy_pair(op, make_state({1}, {0}));
    CHECK(e.kinetic == 0.0);
    CHECK(e.potential_seminorm == 1.0);
  }
  {
    const SpectralOperator op({5.0});
    const auto e = energy_pair(op, make_state({0}, {2}));
    CHECK(e.kinetic == 4.0);
    CHECK(e.potential_seminorm == 0.0);
  }
  {
    const SpectralOperator op({1.0, 2.0});
    const auto e = energy_pair(op, make_state({1, 1}, {1, 1}));
    CHECK(e.kinetic == 2.0);
    CHECK(e.potential_seminorm == 5.0);
  }
  const SpectralOperator op({1.0});
  CHECK_THROWS_AS(energy_pair(op, make_state({1}, {1, 2})), InvalidInput);
}

TEST_CASE("project_data examples") {
  const auto op = SpectralOperator::laplacian_1d(3);
  const auto data = DataSpec::from_coefficients({1.0, 0.5, 0.25}, {});
  const auto s = project_data(op, data, 2);
  CHECK(s.t == 0.0);
  CHECK(s.position == std::vector<double>{1.0, 0.5});
  CHECK(s.velocity == std::vector<double>{0.0, 0.0});

  const auto full = project_data(op, data, 3);
  CHECK(full.position == data.u0);
  CHECK(full.velocity == data.u1);

  const auto d2 = DataSpec::from_coefficients({0, 0, 0}, {1, 1, 1});
  const auto one = project_data(op, d2, 1);
  CHECK(one.position == std::vector<double>{0.0});
  CHECK(one.velocity == std::vector<double>{1.0});

  CHECK_THROWS_AS(project_data(op, data, 0), InvalidInput);
  CHECK_THROWS_AS(project_data(op, data, 4), InvalidInput);

  // data shorter than n is padded with zeros
  const auto short_data = DataSpec::from_coefficients({1.0}, {});
  CHECK(project_data(op, short_data, 3).position == std::vector<double>{1.0, 0.0, 0.0});
}

TEST_CASE("split_state examples") {
  const auto s = make_state({1, 2, 3}, {4, 5, 6}, 0.5);
  const auto a = split_state(s, 1);
  CHECK(a.low.position == std::vector<double>{1});
  CHECK(a.high.position == std::vector<double>{2, 3});
  CHECK(a.high.first_mode == 2);
  CHECK(a.low.t == 0.5);
  CHECK(a.high.t == 0.5);
  const auto b = split_state(s, 2);
  CHECK(b.low.position == std::vector<double>{1, 2});
  CHECK(b.high.position == std::vector<double>{3});
  CHECK(b.high.velocity == std::vector<double>{6});
  for (std::size_t k = 1; k < 3; ++k) {
    const auto r = recombine(split_state(s, k));
    CHECK(r.position == s.position);
    CHECK(r.velocity == s.velocity);
    CHECK(r.t == s.t);
  }
  CHECK_THROWS_AS(split_state(s, 3), InvalidInput);
  CHECK_THROWS_AS(split_state(s, 0), InvalidInput);
}

TEST_CASE("splitting is orthogonal") {
  const auto op = SpectralOperator::power(40, 1.5);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = random_state(40, seed);
    const auto whole = energy_pair(op, s);
    for (std::size_t k = 1; k < 40; ++k) {
      const auto sp = split_state(s, k);
      const auto lo = energy_pair(op, sp.low);
      const auto hi = energy_pair(op, sp.high);
      CHECK(std::abs(lo.kinetic + hi.kinetic - whole.kinetic) <= 1e-12 * whole.kinetic);
      CHECK(std::abs(lo.potential_seminorm + hi.potential_seminorm - whole.potential_seminorm) <=
            1e-12 * whole.potential_seminorm);
    }
  }
}

TEST_CASE("half_norm_sq is homogeneous of degree two") {
  const auto op = SpectralOperator::laplacian_1d(30);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = random_state(30, seed);
    const double base = half_norm_sq(op, s.position);
    for (double c : {-3.0, -0.5, 0.0, 1e-3, 7.0}) {
      std::vector<double> scaled(s.position);
      for (double& x : scaled) x *= c;
      CHECK(std::abs(half_norm_sq(op, scaled) - c * c * base) <= 1e-12 * c * c * base);
    }
  }
}

TEST_CASE("projection commutes with truncation") {
  const auto op = SpectralOperator::laplacian_1d(20);
  const auto data = random_coefficients(op, 20, 3);
  for (std::size_t n2 = 1; n2 <= 20; ++n2) {
    const auto big = project_data(op, data, n2);
    for (std::size_t n1 = 1; n1 <= n2; ++n1) {
      const auto a = truncate(big, n1);
      const auto b = project_data(op, data, n1);
      CHECK(a.position == b.position);
      CHECK(a.velocity == b.velocity);
    }
  }
}
