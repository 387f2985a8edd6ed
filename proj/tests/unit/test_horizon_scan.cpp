#include <doctest.h>

#include <cmath>
#include <numbers>

#include "pcbf/config.hpp"
#include "pcbf/horizon_scan.hpp"
#include "pcbf/scalar_search.hpp"
#include "pcbf/scenarios.hpp"
#include "toy_models.hpp"

using namespace pcbf;
using std::numbers::pi;

namespace {

// Along the unit-rate drift from x = 0 at t = 0, h(tau, p) = phi(tau).
HorizonGrid drift_scan(std::function<double(double)> phi, std::function<double(double)> dphi,
                       double horizon, int intervals = 200, double bound = 10.0) {
  const auto path = toy::drifting_path(1.0);
  return scan(*path, toy::state_constraint(std::move(phi), std::move(dphi), bound), 0.0,
              toy::scalar(0.0), horizon, intervals);
}

}  // namespace

TEST_CASE("golden section and upcrossing bisection") {
  const ScalarPoint p = golden_section_maximize([](double x) { return -(x - 0.3) * (x - 0.3); },
                                                0.0, 1.0, 1e-10);
  CHECK(std::abs(p.x - 0.3) < 1e-8);
  const double r = bisect_upcrossing([](double x) { return x * x - 2.0; }, 0.0, 2.0, 2.0).x;
  CHECK(std::abs(r - std::sqrt(2.0)) < 1e-14);
}

TEST_CASE("scan samples start at x and end exactly at t + T") {
  const HorizonGrid g = drift_scan([](double x) { return std::sin(x); },
                                   [](double x) { return std::cos(x); }, 10.0, 80);
  CHECK(g.samples.size() == 81);
  CHECK(g.samples.front().state(0) == 0.0);
  CHECK(g.samples.back().tau == 10.0);
  CHECK_THROWS_AS(drift_scan([](double x) { return x; }, [](double) { return 1.0; }, 10.0, 20),
                  ConfigError);
}

TEST_CASE("sin along the path has maximizers at pi/2 and 5 pi/2") {
  const HorizonGrid g = drift_scan([](double x) { return std::sin(x); },
                                   [](double x) { return std::cos(x); }, 10.0);
  const MaximizerSet m = find_maximizers(g, 1e-9, 1e-12);
  REQUIRE(m.cardinality() == 2);
  CHECK(std::abs(m.entries[0].tau - pi / 2) < 1e-6);
  CHECK(std::abs(m.entries[1].tau - 5 * pi / 2) < 1e-6);
  CHECK_FALSE(m.entries[0].at_start);
  CHECK_FALSE(m.entries[1].at_end);
  // Both peaks sit above zero: the roots are the upcrossings at 0 and 2 pi.
  CHECK(std::abs(m.entries[1].root_eta - 2 * pi) < 1e-9);
  CHECK_FALSE(m.entries[1].root_is_self);
}

TEST_CASE("monotone h gives a single boundary maximizer") {
  const HorizonGrid dec = drift_scan([](double x) { return -x - 1.0; }, [](double) { return -1.0; }, 10.0);
  const MaximizerSet md = find_maximizers(dec, 1e-9, 1e-12);
  REQUIRE(md.cardinality() == 1);
  CHECK(md.first().tau == 0.0);
  CHECK(md.first().at_start);

  const HorizonGrid inc = drift_scan([](double x) { return x - 20.0; }, [](double) { return 1.0; }, 10.0);
  const MaximizerSet mi = find_maximizers(inc, 1e-9, 1e-12);
  REQUIRE(mi.cardinality() == 1);
  CHECK(mi.first().tau == 10.0);
  CHECK(mi.first().at_end);
  CHECK(mi.first().root_is_self);
}

TEST_CASE("a plateau yields its first time") {
  // min(sin, 1/2) is flat from pi/6 to 5 pi/6.
  const HorizonGrid g = drift_scan([](double x) { return std::min(std::sin(x), 0.5); },
                                   [](double x) { return std::sin(x) < 0.5 ? std::cos(x) : 0.0; },
                                   4.0, 400);
  const MaximizerSet m = find_maximizers(g, 1e-9, 1e-12);
  REQUIRE(m.cardinality() >= 1);
  CHECK(std::abs(m.first().tau - pi / 6) <= g.spacing());
  CHECK(m.first().h_value == doctest::Approx(0.5));
}

TEST_CASE("grid refinement leaves the car maximizer time unchanged") {
  const Scenario sc = build_scenario(default_config(ScenarioId::IntersectionLeftTurn));
  const HorizonGrid coarse = scan(*sc.path, sc.constraint, 6.0, sc.path->evaluate(6.0, 0.0, sc.x0), 10.0, 100);
  const HorizonGrid fine = scan(*sc.path, sc.constraint, 6.0, sc.path->evaluate(6.0, 0.0, sc.x0), 10.0, 1000);
  const MaximizerSet a = find_maximizers(coarse, 1e-9, 1e-12);
  const MaximizerSet b = find_maximizers(fine, 1e-9, 1e-12);
  REQUIRE(a.cardinality() == b.cardinality());
  for (std::size_t i = 0; i < a.cardinality(); ++i) {
    CHECK(std::abs(a.entries[i].tau - b.entries[i].tau) < 1e-4);
  }
}

TEST_CASE("root search returns tau when h is not positive there") {
  const HorizonGrid g = drift_scan([](double x) { return std::sin(x); },
                                   [](double x) { return std::cos(x); }, 10.0);
  const RootSearch r = find_root_before(g, 4.0, 1e-12);
  CHECK(r.eta == 4.0);
  CHECK_FALSE(r.already_unsafe);
}

TEST_CASE("single zero crossing matches the analytic root") {
  const HorizonGrid g = drift_scan([](double x) { return std::sin(x) - 0.5; },
                                   [](double x) { return std::cos(x); }, 10.0);
  const double root_tol = 1e-12;
  const RootSearch r = find_root_before(g, pi / 2, root_tol);
  CHECK(std::abs(r.eta - pi / 6) <= root_tol / std::cos(pi / 6));
}

TEST_CASE("tangency followed by a crossing resolves to the last upcrossing") {
  // (p - 1)^2 (p - 4) / 9 touches zero at 1 and crosses upward at 4.
  auto phi = [](double p) { return (p - 1) * (p - 1) * (p - 4) / 9.0; };
  auto dphi = [](double p) { return (2 * (p - 1) * (p - 4) + (p - 1) * (p - 1)) / 9.0; };
  const HorizonGrid g = drift_scan(phi, dphi, 6.0, 200, 100.0);
  const RootSearch r = find_root_before(g, 6.0, 1e-12);

  // Brute-force oracle: the last sign change from <= 0 to > 0 on a dense grid.
  double last = -1.0;
  const int n = 600000;
  for (int i = 1; i <= n; ++i) {
    const double a = 6.0 * (i - 1) / n, b = 6.0 * i / n;
    if (phi(a) <= 0.0 && phi(b) > 0.0) last = b;
  }
  CHECK(std::abs(r.eta - last) <= 6.0 / n);
  CHECK(std::abs(r.eta - 4.0) < 1e-9);
}

TEST_CASE("positive h at the start with no upcrossing is flagged") {
  const HorizonGrid g = drift_scan([](double x) { return 0.5 - 0.1 * x; },
                                   [](double) { return -0.1; }, 10.0);
  const MaximizerSet m = find_maximizers(g, 1e-9, 1e-12);
  REQUIRE(m.cardinality() == 1);
  CHECK(m.first().at_start);
  CHECK(m.first().already_unsafe);
  CHECK(m.first().root_eta == 0.0);
}

TEST_CASE("zero-control satellite path crosses into the keep-out zone") {
  const Scenario sc = build_scenario(default_config(ScenarioId::Satellite));
  const double t = sc.cfg.conjunction_time - 600.0;
  const StateVector x = sc.path->evaluate(t, 0.0, sc.x0);
  const HorizonGrid g = scan(*sc.path, sc.constraint, t, x, sc.cfg.horizon, sc.cfg.intervals);
  double top = -1e300;
  for (const PathEvaluation& e : g.samples) top = std::max(top, e.h_value);
  CHECK(top > 0.0);
}
