#pragma once

#include <functional>
#include <memory>

#include "pcbf/pcbf.hpp"

// Small systems with closed-form paths, used as oracles by the unit tests.
namespace toy {

using pcbf::ControlVector;
using pcbf::InputMatrix;
using pcbf::StateRow;
using pcbf::StateVector;

/// xdot = u in one dimension.
class Integrator final : public pcbf::DynamicsModel {
 public:
  int state_dim() const override { return 1; }
  int input_dim() const override { return 1; }
  StateVector drift(double, const StateVector&) const override { return StateVector::Zero(1); }
  InputMatrix input_matrix(double, const StateVector&) const override {
    return InputMatrix::Ones(1, 1);
  }
};

/// xddot = u; x = [position, velocity].
class DoubleIntegrator final : public pcbf::DynamicsModel {
 public:
  int state_dim() const override { return 2; }
  int input_dim() const override { return 1; }
  StateVector drift(double, const StateVector& x) const override {
    StateVector f(2);
    f << x(1), 0.0;
    return f;
  }
  InputMatrix input_matrix(double, const StateVector&) const override {
    InputMatrix g(2, 1);
    g << 0.0, 1.0;
    return g;
  }
};

/// Scalar-state constraint h(t, x) = phi(t, x0) with user derivatives.
class ScalarConstraint final : public pcbf::ConstraintFunction {
 public:
  using Fn = std::function<double(double, double)>;
  ScalarConstraint(Fn value, Fn dt, Fn dx, double bound)
      : value_(std::move(value)), dt_(std::move(dt)), dx_(std::move(dx)), bound_(bound) {}

  double value(double t, const StateVector& x) const override { return value_(t, x(0)); }
  double grad_t(double t, const StateVector& x) const override { return dt_(t, x(0)); }
  StateRow grad_x(double t, const StateVector& x) const override {
    StateRow r(x.size());
    r.setZero();
    r(0) = dx_(t, x(0));
    return r;
  }
  double h_max() const override { return bound_; }

 private:
  Fn value_, dt_, dx_;
  double bound_;
};

/// Time-invariant h(x) = phi(x).
inline std::shared_ptr<const pcbf::ConstraintFunction> state_constraint(
    std::function<double(double)> phi, std::function<double(double)> dphi, double bound) {
  return std::make_shared<ScalarConstraint>([phi](double, double x) { return phi(x); },
                                            [](double, double) { return 0.0; },
                                            [dphi](double, double x) { return dphi(x); }, bound);
}

/// Path of the integrator under constant mu: p(tau; t, x) = x + rate (tau - t).
inline std::shared_ptr<const pcbf::PathFunction> drifting_path(double rate, double step = 0.01) {
  return pcbf::ode_path(std::make_shared<Integrator>(),
                        [rate](double, const StateVector&) {
                          ControlVector u(1);
                          u(0) = rate;
                          return u;
                        },
                        step);
}

inline StateVector scalar(double v) {
  StateVector x(1);
  x(0) = v;
  return x;
}

inline pcbf::PcbfContext context(std::shared_ptr<const pcbf::ConstraintFunction> h, double rate,
                                 double horizon, int intervals = 200, double h_max = 1.0) {
  return pcbf::PcbfContext{std::make_shared<Integrator>(), std::move(h), drifting_path(rate),
                           pcbf::make_default_margin(h_max, horizon), intervals, 1e-9, 1e-12};
}

}  // namespace toy
