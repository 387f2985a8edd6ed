#include "pcbf/simulation.hpp"

#include <chrono>
#include <cmath>

#include "pcbf/log.hpp"

namespace pcbf {

PcbfContext make_pcbf_context(const Scenario& sc) {
  return PcbfContext{sc.model,
                     sc.constraint,
                     sc.path,
                     make_default_margin(sc.cfg.h_max, sc.cfg.horizon),
                     sc.cfg.intervals,
                     sc.cfg.refine_tol,
                     sc.cfg.root_tol};
}

PcbfController::PcbfController(const Scenario& sc)
    : mu_(sc.mu),
      ctx_(make_pcbf_context(sc)),
      alpha_(make_compatible_alpha(ctx_.margin, sc.cfg.gamma)),
      slack_weight_(sc.cfg.slack_weight) {}

ControlDecision PcbfController::decide(double t, const StateVector& x) {
  ControlDecision d;
  d.mu = mu_(t, x);
  const PcbfValue v = eval_pcbf(t, x, ctx_, last_root_self_);
  last_root_self_ = v.maximizers.first().root_is_self;
  d.h_star = v.h_star;
  d.case_label = v.case_label;
  d.maximizers = v.maximizers.cardinality();
  d.already_unsafe = v.already_unsafe;

  std::vector<AffineConstraint> rows;
  const std::size_t n_rows =
      std::min<std::size_t>(v.maximizers.cardinality(), 1 + static_cast<std::size_t>(kMaxSlackRows));
  for (std::size_t i = 0; i < n_rows; ++i) {
    const MaximizerEntry& e = v.maximizers.entries[i];
    const AffineDerivative deriv = derivative_affine(e, v, t, x, ctx_);
    d.inner_product_violations += deriv.inner_product_violation ? 1 : 0;
    if (i == 0) {
      d.degenerate_sensitivity = deriv.degenerate_sensitivity;
      d.zero_row = deriv.zero_row;
    }
    const std::optional<double> weight =
        i == 0 ? std::nullopt : std::optional<double>(slack_weight_);
    rows.push_back(build_cbf_constraint(v.h_vector[i], deriv, alpha_, d.mu, weight));
  }
  const FilterResult r = solve_min_deviation(d.mu, rows);
  d.u = r.u;
  d.feasible = r.feasible;
  d.active_set = r.active_set;
  d.slacks = r.slack_values;
  if (!r.feasible) {
    log(LogLevel::Warn, "pcbf: infeasible filter at t = " + std::to_string(t) + ", applying mu");
  }
  return d;
}

namespace {

class EcbfController final : public Controller {
 public:
  EcbfController(const Scenario& sc)
      : mu_(sc.mu), filter_(sc.model, sc.constraint, sc.cfg.ecbf_k1, sc.cfg.ecbf_k2) {}

  ControlDecision decide(double t, const StateVector& x) override {
    ControlDecision d;
    d.mu = mu_(t, x);
    const FilterResult r = filter_.filter(t, x, d.mu);
    d.u = r.u;
    d.feasible = r.feasible;
    d.active_set = r.active_set;
    return d;
  }

 private:
  ControlLaw mu_;
  EcbfFilter filter_;
};

class OpenLoopController final : public Controller {
 public:
  OpenLoopController(ControlLaw mu, bool apply_mu) : mu_(std::move(mu)), apply_mu_(apply_mu) {}

  ControlDecision decide(double t, const StateVector& x) override {
    ControlDecision d;
    d.mu = mu_(t, x);
    d.u = apply_mu_ ? d.mu : ControlVector::Zero(d.mu.size()).eval();
    return d;
  }

 private:
  ControlLaw mu_;
  bool apply_mu_;
};

}  // namespace

std::unique_ptr<Controller> make_controller(const Scenario& sc, ControllerKind kind) {
  switch (kind) {
    case ControllerKind::Pcbf:
      return std::make_unique<PcbfController>(sc);
    case ControllerKind::Ecbf:
      return std::make_unique<EcbfController>(sc);
    case ControllerKind::None:
      return std::make_unique<OpenLoopController>(sc.mu, false);
    case ControllerKind::Nominal:
      return std::make_unique<OpenLoopController>(sc.mu, true);
  }
  throw ConfigError("unknown controller kind");
}

SimLog run_closed_loop(const ScenarioConfig& cfg) {
  const Scenario sc = build_scenario(cfg);
  const auto controller = make_controller(sc, cfg.controller);
  return run_closed_loop(sc, *controller);
}

SimLog run_closed_loop(const Scenario& sc, Controller& controller) {
  const ScenarioConfig& cfg = sc.cfg;
  SimLog out;
  out.cfg = cfg;
  const auto steps = static_cast<long>(std::llround(cfg.duration / cfg.step));
  out.records.reserve(static_cast<std::size_t>(steps) + 1);
  const double h_bound = sc.constraint->h_max();
  StateVector x = sc.x0;

  for (long k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * cfg.step;
    SimRecord rec;
    rec.t = t;
    rec.x = x;
    rec.h = sc.constraint->value(t, x);
    if (rec.h > h_bound * (1.0 + 1e-12)) {
      throw ConsistencyError("h = " + std::to_string(rec.h) + " exceeds its bound h_max");
    }

    const auto start = std::chrono::steady_clock::now();
    try {
      rec.decision = controller.decide(t, x);
    } catch (const Error& e) {
      log(LogLevel::Warn, std::string("controller error at t = ") + std::to_string(t) + ": " +
                              e.what() + "; applying mu");
      rec.decision = ControlDecision{};
      rec.decision.mu = sc.mu(t, x);
      rec.decision.u = rec.decision.mu;
      rec.decision.feasible = false;
      rec.decision.controller_error = true;
    }
    rec.step_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

    if (k == 0 && cfg.controller == ControllerKind::Pcbf && rec.decision.h_star > 0.0) {
      log(LogLevel::Warn, "initial state is outside the PCBF safe set (H* = " +
                              std::to_string(rec.decision.h_star) + ")");
    }
    const ControlVector u = rec.decision.u;
    out.records.push_back(std::move(rec));
    if (k == steps) break;

    x = rk4_step(*sc.model, t, x, u, cfg.step);
    if (!x.allFinite()) {
      out.aborted = true;
      out.abort_reason = "non-finite state after t = " + std::to_string(t);
      log(LogLevel::Error, out.abort_reason);
      break;
    }
  }
  return out;
}

double dense_max_h(const Scenario& sc, const SimLog& log, int substeps) {
  double worst = -std::numeric_limits<double>::infinity();
  const double dt = log.cfg.step / substeps;
  for (std::size_t k = 0; k < log.records.size(); ++k) {
    const SimRecord& r = log.records[k];
    worst = std::max(worst, r.h);
    if (k + 1 == log.records.size()) break;
    StateVector x = r.x;
    for (int i = 0; i < substeps; ++i) {
      const double t = r.t + i * dt;
      x = rk4_step(*sc.model, t, x, r.decision.u, dt);
      worst = std::max(worst, sc.constraint->value(t + dt, x));
    }
  }
  return worst;
}

}  // namespace pcbf
