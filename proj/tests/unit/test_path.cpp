#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "pcbf/config.hpp"
#include "pcbf/path.hpp"
#include "pcbf/scenarios.hpp"
#include "toy_models.hpp"

using namespace pcbf;

namespace {

StateVector car_state(double z1, double zd1, double z2, double zd2) {
  StateVector x(4);
  x << z1, zd1, z2, zd2;
  return x;
}

// Independent RK4 of zddot = k (v - zdot) for one car.
Eigen::Vector2d rk4_car(Eigen::Vector2d s, double k, double v, double duration, int steps) {
  auto f = [&](const Eigen::Vector2d& y) { return Eigen::Vector2d(y(1), k * (v - y(1))); };
  const double h = duration / steps;
  for (int i = 0; i < steps; ++i) {
    const Eigen::Vector2d k1 = f(s), k2 = f(s + 0.5 * h * k1), k3 = f(s + 0.5 * h * k2),
                          k4 = f(s + h * k3);
    s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return s;
}

}  // namespace

TEST_CASE("car path hand value at one time constant") {
  const auto path = analytic_car_path(1.0, {1.0, 1.0});
  const StateVector p = path->evaluate(1.0, 0.0, car_state(0, 0, 0, 0));
  const double e = std::exp(-1.0);
  CHECK(std::abs(p(0) - e) < 1e-15);
  CHECK(std::abs(p(1) - (1.0 - e)) < 1e-15);
  CHECK(std::abs(p(0) - 0.3679) < 1e-4);
  CHECK(std::abs(p(1) - 0.6321) < 1e-4);
  const Eigen::Vector2d ref = rk4_car({0.0, 0.0}, 1.0, 1.0, 1.0, 1000);
  CHECK(std::abs(p(0) - ref(0)) < 1e-6);
  CHECK(std::abs(p(1) - ref(1)) < 1e-6);
}

TEST_CASE("car path agrees with direct integration at random states") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  const auto path = analytic_car_path(0.8, {5.0, 3.0});
  for (int n = 0; n < 20; ++n) {
    const StateVector x = car_state(u(rng), 5.0 + u(rng), u(rng), 3.0 + u(rng));
    const double t = 2.0 + u(rng);
    const double dur = 5.0 + u(rng);
    const StateVector p = path->evaluate(t + dur, t, x);
    const Eigen::Vector2d c1 = rk4_car({x(0), x(1)}, 0.8, 5.0, dur, 2000);
    const Eigen::Vector2d c2 = rk4_car({x(2), x(3)}, 0.8, 3.0, dur, 2000);
    CHECK((Eigen::Vector4d(p(0), p(1), p(2), p(3)) - Eigen::Vector4d(c1(0), c1(1), c2(0), c2(1)))
              .norm() < 1e-6);
  }
}

TEST_CASE("car path identity at tau = t and velocity limit") {
  const auto path = analytic_car_path(1.5, {5.0, 4.0});
  const StateVector x = car_state(-3.3, 2.7, 11.1, 0.3);
  const auto flow = path->flow(7.0, x);
  CHECK((flow->state(7.0).array() == x.array()).all());
  CHECK(flow->sensitivity(7.0).isIdentity(0.0));
  const StateVector far = flow->state(7.0 + 60.0);
  CHECK(std::abs(far(1) - 5.0) < 1e-12);
  CHECK(std::abs(far(3) - 4.0) < 1e-12);
}

TEST_CASE("car path sensitivity block has the closed form") {
  const double k = 1.2;
  const auto path = analytic_car_path(k, {5.0, 5.0});
  const StateMatrix phi = path->state_sensitivity(2.5, 1.0, car_state(0, 1, 2, 3));
  const double d = std::exp(-k * 1.5);
  CHECK(phi(0, 0) == 1.0);
  CHECK(std::abs(phi(0, 1) - (1.0 - d) / k) < 1e-15);
  CHECK(std::abs(phi(1, 1) - d) < 1e-15);
  CHECK(phi(1, 0) == 0.0);
  CHECK(phi(0, 2) == 0.0);
  CHECK(std::abs(phi(2, 3) - (1.0 - d) / k) < 1e-15);
}

TEST_CASE("car path rejects a nonpositive gain and tau before t") {
  CHECK_THROWS_AS(analytic_car_path(0.0, {1.0, 1.0}), ConfigError);
  const auto path = analytic_car_path(1.0, {1.0, 1.0});
  CHECK_THROWS_AS(path->evaluate(0.5, 1.0, car_state(0, 0, 0, 0)), DomainError);
}

TEST_CASE("ode path on the car model reproduces the closed form") {
  const ScenarioConfig cfg = default_config(ScenarioId::IntersectionCross);
  const Scenario sc = build_scenario(cfg);
  const auto ode = ode_path(sc.model, sc.mu, 0.01);
  const StateVector x = car_state(-20.0, 3.0, -10.0, 6.0);
  for (double tau : {0.0, 0.37, 2.0, 9.99}) {
    CHECK((ode->evaluate(tau, 0.0, x) - sc.path->evaluate(tau, 0.0, x)).norm() < 1e-8);
    CHECK((ode->state_sensitivity(tau, 0.0, x) - sc.path->state_sensitivity(tau, 0.0, x))
              .cwiseAbs()
              .maxCoeff() < 1e-7);
  }
}

TEST_CASE("zero-control orbit conserves energy over one period") {
  const Scenario sc = build_scenario(default_config(ScenarioId::Satellite));
  const double mu = sc.cfg.mu_grav;
  const double e0 = orbital_energy(sc.x0, mu);
  const double a = -mu / (2.0 * e0);
  const double period = 2.0 * 3.14159265358979323846 * std::sqrt(a * a * a / mu);
  const auto flow = sc.path->flow(0.0, sc.x0);
  double drift = 0.0;
  for (int k = 1; k <= 200; ++k) {
    drift = std::max(drift, std::abs(orbital_energy(flow->state(period * k / 200.0), mu) - e0) /
                                std::abs(e0));
  }
  CHECK(drift <= 1e-8);
  // Back at the start after one period, to the accuracy of a 1 s RK4 step.
  CHECK((flow->state(period) - sc.x0).head(3).norm() < 1e-3);
}

TEST_CASE("ode sensitivity matches finite differences on the orbit") {
  const Scenario sc = build_scenario(default_config(ScenarioId::Satellite));
  std::mt19937_64 rng(8);
  for (int n = 0; n < 20; ++n) {
    const StateSample s = sample_state(sc, rng);
    const double tau = s.t + 1200.0 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const StateMatrix phi = sc.path->state_sensitivity(tau, s.t, s.x);
    double worst = 0.0;
    for (int j = 0; j < 6; ++j) {
      const double eps = 1e-6 * std::max(1.0, std::abs(s.x(j)));
      StateVector xp = s.x, xm = s.x;
      xp(j) += eps;
      xm(j) -= eps;
      const StateVector col =
          (sc.path->evaluate(tau, s.t, xp) - sc.path->evaluate(tau, s.t, xm)) / (2.0 * eps);
      worst = std::max(worst, (col - phi.col(j)).cwiseAbs().maxCoeff());
    }
    CHECK(worst <= std::max(1e-5, 1e-4 * phi.norm()));
  }
}

TEST_CASE("ode path identity, semigroup split and field residual") {
  const Scenario sc = build_scenario(default_config(ScenarioId::Satellite));
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int n = 0; n < 30; ++n) {
    const StateSample s = sample_state(sc, rng);
    const auto flow = sc.path->flow(s.t, s.x);
    CHECK((flow->state(s.t).array() == s.x.array()).all());
    const double tau = s.t + 1200.0 * unit(rng);
    const double sigma = s.t + (tau - s.t) * unit(rng);
    const StateVector p = flow->state(tau);
    const StateVector q = sc.path->evaluate(tau, sigma, flow->state(sigma));
    CHECK((p - q).norm() <= 1e-6 * (1.0 + p.norm()));
    const StateVector f = sc.model->drift(tau, p);
    CHECK((flow->tau_derivative(tau) - f).norm() <= 1e-6 * (1.0 + f.norm()));
  }
}

TEST_CASE("ode path reports the time at which propagation blows up") {
  // xdot = x^2 from x = 1 escapes at t = 1.
  class Riccati final : public DynamicsModel {
   public:
    int state_dim() const override { return 1; }
    int input_dim() const override { return 1; }
    StateVector drift(double, const StateVector& x) const override { return x.cwiseProduct(x); }
    InputMatrix input_matrix(double, const StateVector&) const override {
      return InputMatrix::Zero(1, 1);
    }
  };
  const auto path = ode_path(std::make_shared<Riccati>(),
                             [](double, const StateVector&) { return ControlVector::Zero(1).eval(); },
                             0.25);
  double where = -1.0;
  try {
    path->evaluate(50.0, 0.0, toy::scalar(1.0));
  } catch (const PropagationError& e) {
    where = e.tau();
  }
  CHECK(where > 0.9);
  CHECK(where < 50.0);
}

TEST_CASE("evaluate_along fills h and its path derivative") {
  const Scenario sc = build_scenario(default_config(ScenarioId::IntersectionLeftTurn));
  const auto flow = sc.path->flow(0.0, sc.x0);
  const PathEvaluation e = evaluate_along(*flow, *sc.constraint, 14.0, true);
  CHECK(e.h_value == sc.constraint->value(14.0, e.state));
  const double expect = sc.constraint->grad_t(14.0, e.state) +
                        sc.constraint->grad_x(14.0, e.state).dot(e.dp_dtau);
  CHECK(std::abs(e.dh_dtau - expect) < 1e-12);
  CHECK(e.dp_dx.rows() == 4);
}
