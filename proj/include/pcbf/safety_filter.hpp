#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "pcbf/pcbf.hpp"

namespace pcbf {

/// a u <= b, optionally softened to a u - s <= b with penalty w s^2.
struct AffineConstraint {
  ControlRow row;
  double bound = 0.0;
  std::optional<double> slack_weight;

  bool hard() const { return !slack_weight.has_value(); }
};

struct FilterResult {
  ControlVector u;
  /// Indices into the constraint list that are tight at the solution.
  std::vector<int> active_set;
  /// One value per slacked constraint, in list order.
  std::vector<double> slack_values;
  bool feasible = true;
  double deviation = 0.0;
  double kkt_residual = 0.0;
};

/// a = deriv.row, b = alpha(-H*) - c0 + a mu.
AffineConstraint build_cbf_constraint(double h_value, const AffineDerivative& deriv,
                                      const ClassKFunction& alpha, const ControlVector& mu,
                                      std::optional<double> slack_weight = std::nullopt);

/// Minimizes |u - mu|^2 + sum w_i s_i^2 subject to the constraints. Hard rows
/// must come before slacked ones. A single hard row is solved by projection.
/// When the hard rows cannot be met, returns u = mu with feasible = false.
FilterResult solve_min_deviation(const ControlVector& mu,
                                 const std::vector<AffineConstraint>& constraints);

/// Exponential CBF baseline for relative-degree-two constraints:
/// hddot + k1 hdot + k2 h <= 0, with mu projected onto that half-space.
///
/// The Lie derivatives are generic. psi = dh/dt + grad h . f is the drift-only
/// rate of h and its gradient is taken by central differences.
class EcbfFilter {
 public:
  EcbfFilter(std::shared_ptr<const DynamicsModel> model,
             std::shared_ptr<const ConstraintFunction> h, double k1, double k2);

  AffineConstraint constraint(double t, const StateVector& x) const;
  FilterResult filter(double t, const StateVector& x, const ControlVector& mu) const;

 private:
  double psi(double t, const StateVector& x) const;

  std::shared_ptr<const DynamicsModel> model_;
  std::shared_ptr<const ConstraintFunction> h_;
  double k1_;
  double k2_;
};

}  // namespace pcbf
