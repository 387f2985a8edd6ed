#include "pcbf/pcbf.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pcbf {

const char* case_name(CaseLabel c) {
  switch (c) {
    case CaseLabel::Interior:
      return "I";
    case CaseLabel::EndRootBefore:
      return "II";
    case CaseLabel::BoundaryRootSelf:
      return "III";
  }
  return "?";
}

double eval_hp(const HorizonGrid& grid, const MarginFunction& margin, double tau,
               double root_tol) {
  const double h_tau = grid.constraint->value(tau, grid.flow->state(tau));
  const RootSearch root = find_root_before(grid, tau, root_tol);
  return h_tau - margin.value(root.eta - grid.t);
}

double eval_hp(double tau, double t, const StateVector& x, const PcbfContext& ctx) {
  const HorizonGrid grid = scan(*ctx.path, ctx.constraint, t, x, ctx.horizon(), ctx.intervals);
  return eval_hp(grid, ctx.margin, tau, ctx.root_tol);
}

PcbfValue eval_pcbf(double t, const StateVector& x, const PcbfContext& ctx, bool hold_root_self) {
  PcbfValue v;
  v.grid = scan(*ctx.path, ctx.constraint, t, x, ctx.horizon(), ctx.intervals);
  v.maximizers = find_maximizers(v.grid, ctx.refine_tol, ctx.root_tol);

  MaximizerEntry& first = v.maximizers.entries.front();
  const double band = 1e-6 * ctx.constraint->h_max();
  if (hold_root_self && !first.root_is_self && !first.already_unsafe && first.h_value > 0.0 &&
      first.h_value <= band) {
    first.root_eta = first.tau;
    first.root_is_self = true;
    v.held_root_self = true;
  }

  v.h_vector.reserve(v.maximizers.cardinality());
  for (const MaximizerEntry& e : v.maximizers.entries) {
    v.h_vector.push_back(e.h_value - ctx.margin.value(e.root_eta - t));
  }
  v.h_star = v.h_vector.front();
  v.m_star_tau = first.tau;
  v.root_eta = first.root_eta;
  v.already_unsafe = first.already_unsafe;
  v.case_label = first.already_unsafe ? CaseLabel::BoundaryRootSelf : classify_case(first);
  return v;
}

CaseLabel classify_case(const MaximizerEntry& entry) {
  if (entry.at_end) {
    return entry.root_is_self ? CaseLabel::BoundaryRootSelf : CaseLabel::EndRootBefore;
  }
  if (entry.at_start) {
    if (entry.root_eta < entry.tau) {
      throw ConsistencyError("maximizer at tau = t has a root before it");
    }
    return CaseLabel::BoundaryRootSelf;
  }
  return CaseLabel::Interior;
}

StateRow root_sensitivity_c1(const PathFlow& flow, const ConstraintFunction& h, double eta) {
  const PathEvaluation e = evaluate_along(flow, h, eta, true);
  const StateRow hx = h.grad_x(eta, e.state);
  const double transport = hx.dot(e.dp_dtau.transpose());
  const double bracket = e.dh_dtau;
  if (std::abs(bracket) < 1e-8 * (1.0 + std::abs(transport))) {
    throw DegeneracyError("tangential zero crossing at eta = " + std::to_string(eta));
  }
  return -(hx * e.dp_dx) / bracket;
}

StateRow root_sensitivity_c1(double eta, double t, const StateVector& x, const PcbfContext& ctx) {
  return root_sensitivity_c1(*ctx.path->flow(t, x), *ctx.constraint, eta);
}

StateRow maximizer_sensitivity(const HorizonGrid& grid, const PathFunction& path, double tau) {
  const ConstraintFunction& h = *grid.constraint;
  const PathFlow& flow = *grid.flow;
  const double t = grid.t;
  const StateVector& x = flow.start_state();

  // The step is the fine-scan spacing: sharp maxima need more than T/N.
  const double step = grid.spacing() / kFineFactor;
  const double lo = std::max(t, tau - step);
  const double hi = std::min(grid.end_time(), tau + step);
  const double f_tau = (evaluate_along(flow, h, hi).dh_dtau - evaluate_along(flow, h, lo).dh_dtau) /
                       (hi - lo);
  double scale = 0.0;
  for (const PathEvaluation& s : grid.samples) scale = std::max(scale, std::abs(s.dh_dtau));
  if (!(std::abs(f_tau) >= 1e-8 * (1.0 + scale))) {
    throw DegeneracyError("flat maximum at tau = " + std::to_string(tau));
  }

  const int n = static_cast<int>(x.size());
  StateRow f_x(n);
  StateVector xp = x;
  for (int i = 0; i < n; ++i) {
    const double dx = std::max(1e-6, 1e-7 * std::abs(x(i)));
    xp(i) = x(i) + dx;
    const double fp = evaluate_along(*path.flow(t, xp), h, tau).dh_dtau;
    xp(i) = x(i) - dx;
    const double fm = evaluate_along(*path.flow(t, xp), h, tau).dh_dtau;
    xp(i) = x(i);
    f_x(i) = (fp - fm) / (2.0 * dx);
  }
  return -f_x / f_tau;
}

StateRow maximizer_sensitivity(double tau, double t, const StateVector& x, const PcbfContext& ctx) {
  const HorizonGrid grid = scan(*ctx.path, ctx.constraint, t, x, ctx.horizon(), ctx.intervals);
  return maximizer_sensitivity(grid, *ctx.path, tau);
}

AffineDerivative derivative_affine(const MaximizerEntry& entry, const PcbfValue& value, double t,
                                   const StateVector& x, const PcbfContext& ctx) {
  const ConstraintFunction& h = *ctx.constraint;
  const HorizonGrid& grid = value.grid;
  const InputMatrix g = ctx.model->input_matrix(t, x);
  const int n = static_cast<int>(x.size());
  AffineDerivative d;

  if (entry.already_unsafe || entry.at_start) {
    // h_p = h(t, x) here, so differentiate h directly.
    d.case_label = CaseLabel::BoundaryRootSelf;
    d.constant = grid.samples.front().dh_dtau;
    d.row = h.grad_x(t, x) * g;
    return d;
  }
  d.case_label = classify_case(entry);

  const PathEvaluation at_tau = evaluate_along(*grid.flow, h, entry.tau, true);
  const StateRow hx_tau = h.grad_x(entry.tau, at_tau.state);
  const StateRow hx_phi = hx_tau * at_tau.dp_dx;
  const double mprime = ctx.margin.derivative(entry.root_eta - t);

  auto c1 = [&]() -> StateRow {
    const PathEvaluation at_eta = evaluate_along(*grid.flow, h, entry.root_eta);
    if (hx_tau.dot(h.grad_x(entry.root_eta, at_eta.state)) < 0.0) {
      d.inner_product_violation = true;
    }
    try {
      return root_sensitivity_c1(*grid.flow, h, entry.root_eta);
    } catch (const DegeneracyError&) {
      d.degenerate_sensitivity = true;
      return StateRow::Zero(n);
    }
  };

  switch (d.case_label) {
    case CaseLabel::Interior: {
      StateRow c;
      if (entry.root_is_self) {
        try {
          c = maximizer_sensitivity(grid, *ctx.path, entry.tau);
        } catch (const DegeneracyError&) {
          d.degenerate_sensitivity = true;
          c = StateRow::Zero(n);
        }
      } else {
        c = c1();
      }
      d.constant = mprime;
      d.row = (hx_phi - mprime * c) * g;
      d.zero_row = d.row.isZero(0.0);
      break;
    }
    case CaseLabel::EndRootBefore: {
      // The endpoint slides with the horizon, so dtau/dt = 1.
      d.constant = at_tau.dh_dtau + mprime;
      d.row = (hx_phi - mprime * c1()) * g;
      break;
    }
    case CaseLabel::BoundaryRootSelf: {
      const double dtau_dt = at_tau.dh_dtau > 0.0 ? 1.0 : 0.0;
      d.constant = at_tau.dh_dtau * dtau_dt -
                   ctx.margin.derivative(ctx.horizon()) * (dtau_dt - 1.0);
      d.row = hx_phi * g;
      break;
    }
  }
  return d;
}

}  // namespace pcbf
