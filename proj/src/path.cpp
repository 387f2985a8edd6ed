#include "pcbf/path.hpp"

#include <cmath>
#include <string>

namespace pcbf {

void PathFlow::check_domain(double tau) const {
  if (!(tau >= t_) || !std::isfinite(tau)) {
    throw DomainError("path queried at tau = " + std::to_string(tau) + " before its start t = " +
                      std::to_string(t_));
  }
}

PathEvaluation evaluate_along(const PathFlow& flow, const ConstraintFunction& h, double tau,
                              bool with_sensitivity) {
  PathEvaluation e;
  e.tau = tau;
  e.state = flow.state(tau);
  e.dp_dtau = flow.tau_derivative(tau);
  if (with_sensitivity) e.dp_dx = flow.sensitivity(tau);
  e.h_value = h.value(tau, e.state);
  e.dh_dtau = h.grad_t(tau, e.state) + h.grad_x(tau, e.state).dot(e.dp_dtau.transpose());
  return e;
}

// ---------------------------------------------------------------------------
// Closed-form double-integrator cars

namespace {

class CarPairFlow final : public PathFlow {
 public:
  CarPairFlow(double t, StateVector x, double gain, std::vector<double> speeds)
      : PathFlow(t, std::move(x)), gain_(gain), speeds_(std::move(speeds)) {}

  StateVector state(double tau) const override {
    check_domain(tau);
    const double dt = tau - start_time();
    const double decay = std::exp(-gain_ * dt);
    // (1 - e^{-k dt}) / k without cancellation for small k dt
    const double lag = -std::expm1(-gain_ * dt) / gain_;
    const StateVector& x = start_state();
    StateVector p(x.size());
    for (std::size_t i = 0; i < speeds_.size(); ++i) {
      const double z = x(2 * i);
      const double zdot = x(2 * i + 1);
      const double v = speeds_[i];
      p(2 * i) = z + v * dt + (zdot - v) * lag;
      // Weighted form so that p(t; t, x) reproduces zdot bit for bit.
      p(2 * i + 1) = zdot * decay + v * (gain_ * lag);
    }
    return p;
  }

  StateVector tau_derivative(double tau) const override {
    check_domain(tau);
    const double decay = std::exp(-gain_ * (tau - start_time()));
    const StateVector& x = start_state();
    StateVector d(x.size());
    for (std::size_t i = 0; i < speeds_.size(); ++i) {
      const double excess = x(2 * i + 1) - speeds_[i];
      d(2 * i) = speeds_[i] + excess * decay;
      d(2 * i + 1) = -gain_ * excess * decay;
    }
    return d;
  }

  StateMatrix sensitivity(double tau) const override {
    check_domain(tau);
    const double dt = tau - start_time();
    const double decay = std::exp(-gain_ * dt);
    const double lag = -std::expm1(-gain_ * dt) / gain_;
    const int n = static_cast<int>(start_state().size());
    StateMatrix phi = StateMatrix::Zero(n, n);
    for (std::size_t i = 0; i < speeds_.size(); ++i) {
      const int r = static_cast<int>(2 * i);
      phi(r, r) = 1.0;
      phi(r, r + 1) = lag;
      phi(r + 1, r + 1) = decay;
    }
    return phi;
  }

 private:
  double gain_;
  std::vector<double> speeds_;
};

class CarPairPath final : public PathFunction {
 public:
  CarPairPath(double gain, std::vector<double> speeds) : gain_(gain), speeds_(std::move(speeds)) {}

  int state_dim() const override { return static_cast<int>(2 * speeds_.size()); }
  int input_dim() const override { return static_cast<int>(speeds_.size()); }

  std::shared_ptr<const PathFlow> flow(double t, const StateVector& x) const override {
    if (x.size() != state_dim()) throw DomainError("car path: state dimension mismatch");
    return std::make_shared<CarPairFlow>(t, x, gain_, speeds_);
  }

  ControlVector nominal_control(double, const StateVector& x) const override {
    ControlVector u(input_dim());
    for (std::size_t i = 0; i < speeds_.size(); ++i) {
      u(static_cast<int>(i)) = gain_ * (speeds_[i] - x(static_cast<int>(2 * i + 1)));
    }
    return u;
  }

 private:
  double gain_;
  std::vector<double> speeds_;
};

}  // namespace

std::shared_ptr<const PathFunction> analytic_car_path(double gain,
                                                      std::vector<double> target_speeds) {
  if (!(gain > 0.0) || !std::isfinite(gain)) {
    throw ConfigError("car path: gain k must be positive, got " + std::to_string(gain));
  }
  if (target_speeds.empty() || 2 * target_speeds.size() > kMaxStateDim) {
    throw ConfigError("car path: unsupported number of cars");
  }
  return std::make_shared<CarPairPath>(gain, std::move(target_speeds));
}

// ---------------------------------------------------------------------------
// RK4-propagated path

StateMatrix closed_loop_jacobian(const DynamicsModel& model, const ControlLaw& mu, double t,
                                 const StateVector& x) {
  const int n = static_cast<int>(x.size());
  StateMatrix jac(n, n);
  StateVector xp = x;
  for (int i = 0; i < n; ++i) {
    const double step = std::max(1e-6, 1e-7 * std::abs(x(i)));
    xp(i) = x(i) + step;
    const StateVector fp = model.vector_field(t, xp, mu(t, xp));
    xp(i) = x(i) - step;
    const StateVector fm = model.vector_field(t, xp, mu(t, xp));
    xp(i) = x(i);
    jac.col(i) = (fp - fm) / (2.0 * step);
  }
  return jac;
}

namespace {

class OdeFlow final : public PathFlow {
 public:
  OdeFlow(double t, StateVector x, std::shared_ptr<const DynamicsModel> model, ControlLaw mu,
          double step)
      : PathFlow(t, x), model_(std::move(model)), mu_(std::move(mu)), step_(step) {
    states_.push_back(std::move(x));
  }

  StateVector state(double tau) const override {
    check_domain(tau);
    const auto [k, partial] = locate(tau);
    ensure_states(k);
    if (partial <= 0.0) return states_[k];
    return rk4_state(knot_time(k), states_[k], partial);
  }

  StateVector tau_derivative(double tau) const override {
    const StateVector p = state(tau);
    return field(tau, p);
  }

  StateMatrix sensitivity(double tau) const override {
    check_domain(tau);
    const auto [k, partial] = locate(tau);
    ensure_sensitivities(k);
    if (partial <= 0.0) return phis_[k];
    StateVector x = states_[k];
    StateMatrix phi = phis_[k];
    rk4_variational(knot_time(k), x, phi, partial);
    return phi;
  }

 private:
  double knot_time(std::size_t k) const { return start_time() + static_cast<double>(k) * step_; }

  std::pair<std::size_t, double> locate(double tau) const {
    auto k = static_cast<std::size_t>(std::floor((tau - start_time()) / step_));
    while (knot_time(k + 1) <= tau) ++k;
    while (k > 0 && knot_time(k) > tau) --k;
    return {k, tau - knot_time(k)};
  }

  StateVector field(double t, const StateVector& x) const {
    return model_->vector_field(t, x, mu_(t, x));
  }

  StateVector rk4_state(double t, const StateVector& x, double h) const {
    const StateVector k1 = field(t, x);
    const StateVector k2 = field(t + 0.5 * h, x + 0.5 * h * k1);
    const StateVector k3 = field(t + 0.5 * h, x + 0.5 * h * k2);
    const StateVector k4 = field(t + h, x + h * k3);
    StateVector out = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!out.allFinite()) throw PropagationError("non-finite state in path propagation", t + h);
    return out;
  }

  void rk4_variational(double t, StateVector& x, StateMatrix& phi, double h) const {
    const StateVector k1 = field(t, x);
    const StateMatrix l1 = closed_loop_jacobian(*model_, mu_, t, x) * phi;
    const StateVector x2 = x + 0.5 * h * k1;
    const StateVector k2 = field(t + 0.5 * h, x2);
    const StateMatrix l2 = closed_loop_jacobian(*model_, mu_, t + 0.5 * h, x2) * (phi + 0.5 * h * l1);
    const StateVector x3 = x + 0.5 * h * k2;
    const StateVector k3 = field(t + 0.5 * h, x3);
    const StateMatrix l3 = closed_loop_jacobian(*model_, mu_, t + 0.5 * h, x3) * (phi + 0.5 * h * l2);
    const StateVector x4 = x + h * k3;
    const StateVector k4 = field(t + h, x4);
    const StateMatrix l4 = closed_loop_jacobian(*model_, mu_, t + h, x4) * (phi + h * l3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    phi += (h / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
    if (!x.allFinite() || !phi.allFinite()) {
      throw PropagationError("non-finite sensitivity in path propagation", t + h);
    }
  }

  void ensure_states(std::size_t k) const {
    while (states_.size() <= k) {
      const std::size_t j = states_.size() - 1;
      states_.push_back(rk4_state(knot_time(j), states_[j], step_));
    }
  }

  void ensure_sensitivities(std::size_t k) const {
    if (phis_.empty()) {
      const int n = static_cast<int>(start_state().size());
      phis_.push_back(StateMatrix::Identity(n, n));
    }
    while (phis_.size() <= k) {
      const std::size_t j = phis_.size() - 1;
      StateVector x = states_[j];
      StateMatrix phi = phis_[j];
      rk4_variational(knot_time(j), x, phi, step_);
      // The state half of the joint step is the plain RK4 step; keep the
      // state-only cache authoritative so both queries agree bit for bit.
      if (states_.size() == j + 1) states_.push_back(x);
      phis_.push_back(std::move(phi));
    }
  }

  std::shared_ptr<const DynamicsModel> model_;
  ControlLaw mu_;
  double step_;
  mutable std::vector<StateVector> states_;
  mutable std::vector<StateMatrix> phis_;
};

class OdePath final : public PathFunction {
 public:
  OdePath(std::shared_ptr<const DynamicsModel> model, ControlLaw mu, double step)
      : model_(std::move(model)), mu_(std::move(mu)), step_(step) {}

  int state_dim() const override { return model_->state_dim(); }
  int input_dim() const override { return model_->input_dim(); }

  std::shared_ptr<const PathFlow> flow(double t, const StateVector& x) const override {
    if (x.size() != state_dim()) throw DomainError("ode path: state dimension mismatch");
    return std::make_shared<OdeFlow>(t, x, model_, mu_, step_);
  }

  ControlVector nominal_control(double t, const StateVector& x) const override {
    return mu_(t, x);
  }

 private:
  std::shared_ptr<const DynamicsModel> model_;
  ControlLaw mu_;
  double step_;
};

}  // namespace

std::shared_ptr<const PathFunction> ode_path(std::shared_ptr<const DynamicsModel> model,
                                             ControlLaw mu, double step) {
  if (!model) throw ConfigError("ode path: model is null");
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw ConfigError("ode path: step must be positive, got " + std::to_string(step));
  }
  if (!mu) throw ConfigError("ode path: nominal control law is empty");
  return std::make_shared<OdePath>(std::move(model), std::move(mu), step);
}

}  // namespace pcbf
