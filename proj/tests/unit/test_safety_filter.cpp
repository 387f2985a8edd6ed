#include <doctest.h>

#include <cmath>
#include <random>

#include "pcbf/safety_filter.hpp"
#include "toy_models.hpp"

using namespace pcbf;

namespace {

AffineConstraint hard(std::initializer_list<double> a, double b) {
  AffineConstraint c;
  c.row = ControlRow(static_cast<int>(a.size()));
  int i = 0;
  for (double v : a) c.row(i++) = v;
  c.bound = b;
  return c;
}

ControlVector vec(std::initializer_list<double> v) {
  ControlVector out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST_CASE("nominal input that already satisfies the row is returned unchanged") {
  const FilterResult r = solve_min_deviation(vec({0.5, -0.2}), {hard({1.0, 1.0}, 1.0)});
  CHECK(r.feasible);
  CHECK(r.u == vec({0.5, -0.2}));
  CHECK(r.deviation == 0.0);
  CHECK(r.active_set.empty());
}

TEST_CASE("one-dimensional projection") {
  const FilterResult r = solve_min_deviation(vec({0.0}), {hard({1.0}, -1.0)});
  CHECK(r.u(0) == doctest::Approx(-1.0));
}

TEST_CASE("half-plane projection by hand") {
  const FilterResult r = solve_min_deviation(vec({1.0, 1.0}), {hard({1.0, 0.0}, 0.0)});
  CHECK(std::abs(r.u(0)) < 1e-14);
  CHECK(r.u(1) == doctest::Approx(1.0));
  CHECK(r.deviation == doctest::Approx(1.0));
  // Grid search over the half-plane u1 <= 0.
  double best = 1e300, bu0 = 0, bu1 = 0;
  for (int i = 0; i <= 400; ++i) {
    for (int j = 0; j <= 400; ++j) {
      const double u0 = -2.0 + 2.0 * i / 400, u1 = -1.0 + 3.0 * j / 400;
      const double c = (u0 - 1) * (u0 - 1) + (u1 - 1) * (u1 - 1);
      if (c < best) best = c, bu0 = u0, bu1 = u1;
    }
  }
  CHECK(std::abs(bu0 - r.u(0)) < 1e-2);
  CHECK(std::abs(bu1 - r.u(1)) < 1e-2);
}

TEST_CASE("two active rows meet at a corner") {
  const FilterResult r =
      solve_min_deviation(vec({0.0, 0.0, 3.0}), {hard({-1, 0, 0}, -1.0), hard({0, -1, 0}, -2.0)});
  CHECK(r.feasible);
  CHECK((r.u - vec({1.0, 2.0, 3.0})).norm() < 1e-12);
  CHECK(r.active_set.size() == 2);
  CHECK(r.kkt_residual < 1e-10);
}

TEST_CASE("contradictory hard rows fall back to the nominal input") {
  const FilterResult r = solve_min_deviation(vec({0.3, 0.0}), {hard({1, 0}, -1.0), hard({-1, 0}, -1.0)});
  CHECK_FALSE(r.feasible);
  CHECK(r.u == vec({0.3, 0.0}));
}

TEST_CASE("a slacked row is traded against its weight") {
  // min (u - 0)^2 + w s^2 with -u - s <= -1: u = w / (1 + w), s = 1 / (1 + w).
  AffineConstraint soft = hard({-1.0}, -1.0);
  soft.slack_weight = 4.0;
  const FilterResult r = solve_min_deviation(vec({0.0}), {soft});
  CHECK(r.u(0) == doctest::Approx(0.8));
  REQUIRE(r.slack_values.size() == 1);
  CHECK(r.slack_values[0] == doctest::Approx(0.2));
}

TEST_CASE("hard rows must come first") {
  AffineConstraint soft = hard({1.0}, 0.0);
  soft.slack_weight = 1.0;
  CHECK_THROWS_AS(solve_min_deviation(vec({0.0}), {soft, hard({1.0}, 0.0)}), DomainError);
}

TEST_CASE("barrier row is satisfied exactly when the rate bound holds") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  const ClassKFunction alpha(0.4, 1.3);
  for (int n = 0; n < 200; ++n) {
    AffineDerivative d;
    d.constant = normal(rng);
    d.row = ControlRow(3);
    for (int i = 0; i < 3; ++i) d.row(i) = normal(rng);
    const double h_star = normal(rng);
    const ControlVector mu = vec({normal(rng), normal(rng), normal(rng)});
    const AffineConstraint c = build_cbf_constraint(h_star, d, alpha, mu);
    const ControlVector u = vec({normal(rng), normal(rng), normal(rng)});
    const double lhs = d.constant + d.row.dot(u - mu);
    const double rhs = alpha(-h_star);
    if (std::abs(lhs - rhs) > 1e-9) CHECK((c.row.dot(u) <= c.bound) == (lhs <= rhs));
  }
  AffineDerivative d;
  d.row = ControlRow::Ones(1);
  d.constant = 0.7;
  CHECK(build_cbf_constraint(0.0, d, alpha, vec({0.0})).bound == doctest::Approx(-0.7));
}

TEST_CASE("ecbf row for a double integrator against a wall") {
  const double c = 2.0, k1 = 3.0, k2 = 2.0;
  const auto h = std::make_shared<toy::ScalarConstraint>(
      [c](double, double x) { return x - c; }, [](double, double) { return 0.0; },
      [](double, double) { return 1.0; }, 10.0);
  const EcbfFilter f(std::make_shared<toy::DoubleIntegrator>(), h, k1, k2);
  StateVector x(2);
  x << 0.5, 0.8;
  const AffineConstraint row = f.constraint(0.0, x);
  CHECK(row.row(0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(row.bound == doctest::Approx(-k1 * 0.8 - k2 * (0.5 - c)).epsilon(1e-6));

  // Far from the wall and slowing down: the nominal input passes through.
  x << -5.0, -1.0;
  const FilterResult r = f.filter(0.0, x, vec({0.1}));
  CHECK(r.u(0) == 0.1);
  CHECK_THROWS_AS(EcbfFilter(std::make_shared<toy::DoubleIntegrator>(), h, 1.0, 1.0), ConfigError);
}
