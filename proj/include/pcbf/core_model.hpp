#pragma once

#include <functional>

#include "pcbf/types.hpp"

namespace pcbf {

/// Control-affine system xdot = f(t,x) + g(t,x) u.
class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;

  virtual int state_dim() const = 0;
  virtual int input_dim() const = 0;
  virtual StateVector drift(double t, const StateVector& x) const = 0;
  virtual InputMatrix input_matrix(double t, const StateVector& x) const = 0;

  StateVector vector_field(double t, const StateVector& x, const ControlVector& u) const {
    return drift(t, x) + input_matrix(t, x) * u;
  }
};

/// Constraint function h with safe set {x : h(t,x) <= 0}. Gradients are analytic.
class ConstraintFunction {
 public:
  virtual ~ConstraintFunction() = default;

  virtual double value(double t, const StateVector& x) const = 0;
  virtual double grad_t(double t, const StateVector& x) const = 0;
  virtual StateRow grad_x(double t, const StateVector& x) const = 0;
  /// Upper bound of value() over the whole domain.
  virtual double h_max() const = 0;
};

/// State feedback law, used both as nominal control and as the path generator.
using ControlLaw = std::function<ControlVector(double, const StateVector&)>;

/// Quadratic margin m(l) = h_max (l/T)^2. m(0) = 0 and m(T) = h_max.
class MarginFunction {
 public:
  MarginFunction(double h_max, double horizon);

  double value(double lambda) const;
  double derivative(double lambda) const;
  double h_max() const { return h_max_; }
  double horizon() const { return horizon_; }

 private:
  double h_max_;
  double horizon_;
};

MarginFunction make_default_margin(double h_max, double horizon);

/// Odd class-K function alpha(s) = sign(s) max(c_sqrt sqrt|s|, c_lin |s|).
///
/// The square-root branch makes alpha(m(l)) = m'(l) hold with equality for
/// the quadratic margin, and the linear branch provides alpha(m(T)) >= gamma.
/// The square-root branch is not Lipschitz at the origin, which is what allows
/// the barrier to reach zero in finite time.
class ClassKFunction {
 public:
  ClassKFunction(double sqrt_gain, double linear_gain);

  double value(double s) const;
  double operator()(double s) const { return value(s); }
  double sqrt_gain() const { return sqrt_gain_; }
  double linear_gain() const { return linear_gain_; }

 private:
  double sqrt_gain_;
  double linear_gain_;
};

/// Builds the class-K function compatible with `margin` and the path-rate bound `gamma`.
ClassKFunction make_compatible_alpha(const MarginFunction& margin, double gamma);

}  // namespace pcbf
