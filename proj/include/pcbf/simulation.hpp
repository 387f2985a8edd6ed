#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pcbf/safety_filter.hpp"
#include "pcbf/scenarios.hpp"

namespace pcbf {

/// Rows for M \ M* beyond this many are dropped from the filter.
inline constexpr int kMaxSlackRows = 3;

struct ControlDecision {
  ControlVector u;
  ControlVector mu;
  double h_star = std::numeric_limits<double>::quiet_NaN();
  std::optional<CaseLabel> case_label;
  bool feasible = true;
  std::vector<int> active_set;
  std::vector<double> slacks;
  std::size_t maximizers = 0;
  bool already_unsafe = false;
  // Assumption monitors.
  int inner_product_violations = 0;
  bool degenerate_sensitivity = false;
  bool zero_row = false;
  bool controller_error = false;
};

class Controller {
 public:
  virtual ~Controller() = default;
  virtual ControlDecision decide(double t, const StateVector& x) = 0;
};

/// Minimum-deviation PCBF filter with H* hard and the other maximizers slacked.
/// Stateful only through the root-assignment hysteresis.
class PcbfController final : public Controller {
 public:
  PcbfController(const Scenario& scenario);
  ControlDecision decide(double t, const StateVector& x) override;
  const PcbfContext& context() const { return ctx_; }
  const ClassKFunction& alpha() const { return alpha_; }

 private:
  ControlLaw mu_;
  PcbfContext ctx_;
  ClassKFunction alpha_;
  double slack_weight_;
  bool last_root_self_ = false;
};

std::unique_ptr<Controller> make_controller(const Scenario& scenario, ControllerKind kind);

/// PCBF context for a scenario, as used by PcbfController.
PcbfContext make_pcbf_context(const Scenario& scenario);

struct SimRecord {
  double t = 0.0;
  StateVector x;
  ControlDecision decision;
  double h = 0.0;
  double step_ms = 0.0;
};

struct SimLog {
  ScenarioConfig cfg;
  std::vector<SimRecord> records;
  bool aborted = false;
  std::string abort_reason;
};

SimLog run_closed_loop(const ScenarioConfig& cfg);
SimLog run_closed_loop(const Scenario& scenario, Controller& controller);

/// Largest h over the run, re-integrating each step in `substeps` pieces under
/// the logged zero-order-hold input.
double dense_max_h(const Scenario& scenario, const SimLog& log, int substeps);

}  // namespace pcbf
