#pragma once

#include <memory>
#include <vector>

#include "pcbf/horizon_scan.hpp"

namespace pcbf {

enum class CaseLabel { Interior, EndRootBefore, BoundaryRootSelf };

/// "I", "II" or "III".
const char* case_name(CaseLabel c);

struct PcbfContext {
  std::shared_ptr<const DynamicsModel> model;
  std::shared_ptr<const ConstraintFunction> constraint;
  std::shared_ptr<const PathFunction> path;
  MarginFunction margin;
  int intervals = 200;
  double refine_tol = 1e-7;
  double root_tol = 1e-10;

  double horizon() const { return margin.horizon(); }
};

/// Predictive barrier at one (t, x), together with the scan it came from.
struct PcbfValue {
  double h_star = 0.0;
  std::vector<double> h_vector;
  double m_star_tau = 0.0;
  double root_eta = 0.0;
  CaseLabel case_label = CaseLabel::BoundaryRootSelf;
  bool already_unsafe = false;
  /// M* had h just above zero and was kept at R = tau by the hysteresis band.
  bool held_root_self = false;

  HorizonGrid grid;
  MaximizerSet maximizers;
};

/// dH/dt = constant + row * (u - mu) for one maximizer entry.
struct AffineDerivative {
  double constant = 0.0;
  ControlRow row;
  CaseLabel case_label = CaseLabel::BoundaryRootSelf;
  // Assumption breaches, logged by the caller and never fatal.
  bool degenerate_sensitivity = false;
  bool zero_row = false;
  bool inner_product_violation = false;
};

/// h(tau, p) - m(R(tau) - t) on an existing scan.
double eval_hp(const HorizonGrid& grid, const MarginFunction& margin, double tau, double root_tol);
double eval_hp(double tau, double t, const StateVector& x, const PcbfContext& ctx);

/// Scans the horizon from (t, x) and evaluates h_p at every maximizer.
///
/// With `hold_root_self`, an M* whose h value lies in (0, 1e-6 h_max] keeps
/// R = tau instead of switching to the preceding root. The controller passes
/// the previous step's root_is_self here so the constraint row cannot chatter.
PcbfValue eval_pcbf(double t, const StateVector& x, const PcbfContext& ctx,
                    bool hold_root_self = false);

CaseLabel classify_case(const MaximizerEntry& entry);

/// C1 at a refined root eta of the flow.
StateRow root_sensitivity_c1(const PathFlow& flow, const ConstraintFunction& h, double eta);
StateRow root_sensitivity_c1(double eta, double t, const StateVector& x, const PcbfContext& ctx);

/// d tau / dx of an interior strict maximizer via the implicit function theorem
/// applied to F = d/dtau h(tau, p(tau; t, x)).
StateRow maximizer_sensitivity(const HorizonGrid& grid, const PathFunction& path, double tau);
StateRow maximizer_sensitivity(double tau, double t, const StateVector& x, const PcbfContext& ctx);

/// Affine form of dh_p/dt at `entry`, which must come from value.maximizers.
AffineDerivative derivative_affine(const MaximizerEntry& entry, const PcbfValue& value,
                                   double t, const StateVector& x, const PcbfContext& ctx);

}  // namespace pcbf
