#pragma once

#include <memory>
#include <vector>

#include "pcbf/core_model.hpp"

namespace pcbf {

/// The nominal path p(.; t, x) issued from one fixed (t, x).
///
/// A flow is the unit of caching: the horizon scan, the root/maximizer
/// refinement and the derivative formulas all query the same flow object
/// for one control step. Flows are not safe to share across threads.
class PathFlow {
 public:
  PathFlow(double t, StateVector x) : t_(t), x_(std::move(x)) {}
  virtual ~PathFlow() = default;

  double start_time() const { return t_; }
  const StateVector& start_state() const { return x_; }

  /// p(tau; t, x). Requires tau >= t.
  virtual StateVector state(double tau) const = 0;
  /// dp/dtau at tau, i.e. the closed-loop vector field along the path.
  virtual StateVector tau_derivative(double tau) const = 0;
  /// dp/dx (n x n) at tau.
  virtual StateMatrix sensitivity(double tau) const = 0;

 protected:
  void check_domain(double tau) const;

 private:
  double t_;
  StateVector x_;
};

/// Path function p(tau; t, x) together with the nominal law that generates it.
class PathFunction {
 public:
  virtual ~PathFunction() = default;

  virtual int state_dim() const = 0;
  virtual int input_dim() const = 0;
  virtual std::shared_ptr<const PathFlow> flow(double t, const StateVector& x) const = 0;
  virtual ControlVector nominal_control(double t, const StateVector& x) const = 0;

  StateVector evaluate(double tau, double t, const StateVector& x) const {
    return flow(t, x)->state(tau);
  }
  StateVector tau_derivative(double tau, double t, const StateVector& x) const {
    return flow(t, x)->tau_derivative(tau);
  }
  StateMatrix state_sensitivity(double tau, double t, const StateVector& x) const {
    return flow(t, x)->sensitivity(tau);
  }
};

/// Path sample with the constraint evaluated on it.
struct PathEvaluation {
  double tau = 0.0;
  StateVector state;
  StateVector dp_dtau;
  StateMatrix dp_dx;  ///< empty unless requested
  double h_value = 0.0;
  double dh_dtau = 0.0;
};

PathEvaluation evaluate_along(const PathFlow& flow, const ConstraintFunction& h, double tau,
                              bool with_sensitivity = false);

/// Closed-form path of independent double-integrator cars under
/// mu_i = k (v_i - zdot_i). State layout [z_1, zdot_1, z_2, zdot_2, ...].
std::shared_ptr<const PathFunction> analytic_car_path(double gain,
                                                      std::vector<double> target_speeds);

/// Path obtained by fixed-step RK4 integration of xdot = f + g mu. The state
/// sensitivity is co-integrated from the variational equation, with the
/// closed-loop Jacobian taken by central differences.
std::shared_ptr<const PathFunction> ode_path(std::shared_ptr<const DynamicsModel> model,
                                             ControlLaw mu, double step);

/// Central-difference Jacobian of the closed-loop field f + g mu at (t, x).
StateMatrix closed_loop_jacobian(const DynamicsModel& model, const ControlLaw& mu, double t,
                                 const StateVector& x);

}  // namespace pcbf
