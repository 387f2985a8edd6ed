#include "pcbf/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace pcbf {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

RunSummary summarize(const Scenario& sc, const SimLog& log) {
  RunSummary s;
  s.scenario = to_string(log.cfg.scenario);
  s.controller = to_string(log.cfg.controller);
  s.steps = log.records.size();
  s.aborted = log.aborted;
  if (log.records.empty()) return s;

  s.max_h = -std::numeric_limits<double>::infinity();
  s.max_hstar = -std::numeric_limits<double>::infinity();
  const double threat_level = -0.5 * make_default_margin(log.cfg.h_max, log.cfg.horizon)
                                         .value(log.cfg.horizon);
  std::vector<double> jumps;
  double step_ms_sum = 0.0;
  for (std::size_t k = 0; k < log.records.size(); ++k) {
    const SimRecord& r = log.records[k];
    const ControlDecision& d = r.decision;
    s.max_h = std::max(s.max_h, r.h);
    if (!std::isnan(d.h_star)) s.max_hstar = std::max(s.max_hstar, d.h_star);
    const double unorm = d.u.norm();
    s.max_control_norm = std::max(s.max_control_norm, unorm);
    if (k + 1 < log.records.size()) s.total_deviation += (d.u - d.mu).norm() * log.cfg.step;
    step_ms_sum += r.step_ms;
    s.max_step_ms = std::max(s.max_step_ms, r.step_ms);
    s.infeasible_steps += d.feasible ? 0 : 1;
    s.controller_errors += d.controller_error ? 1 : 0;
    s.assumption_violations +=
        d.inner_product_violations + (d.degenerate_sensitivity ? 1 : 0) + (d.zero_row ? 1 : 0);
    if (s.first_control_time < 0.0 && unorm > 0.0) s.first_control_time = r.t;
    if (s.threat_entry_time < 0.0 && d.h_star > threat_level) s.threat_entry_time = r.t;
    if (k > 0) jumps.push_back((d.u - log.records[k - 1].decision.u).norm());
  }
  s.final_h = log.records.back().h;
  s.mean_step_ms = step_ms_sum / static_cast<double>(log.records.size());
  s.dense_max_h = dense_max_h(sc, log, 100);
  if (s.max_hstar == -std::numeric_limits<double>::infinity()) {
    s.max_hstar = std::numeric_limits<double>::quiet_NaN();
  }

  if (!jumps.empty()) {
    std::vector<double> sorted = jumps;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double median = sorted[sorted.size() / 2];
    if (median > 0.0) {
      s.control_jumps = static_cast<int>(
          std::count_if(jumps.begin(), jumps.end(), [&](double j) { return j > 10.0 * median; }));
    }
  }

  if (!sc.conflict_arc.empty()) {
    const StateVector& xf = log.records.back().x;
    s.car1_crossed = xf(0) > sc.conflict_arc[0];
    s.car2_crossed = xf(2) > sc.conflict_arc[1];
    s.min_speed_ratio1 = std::numeric_limits<double>::infinity();
    s.min_speed_ratio2 = std::numeric_limits<double>::infinity();
    for (const SimRecord& r : log.records) {
      s.min_speed_ratio1 = std::min(s.min_speed_ratio1, r.x(1) / log.cfg.speed1);
      s.min_speed_ratio2 = std::min(s.min_speed_ratio2, r.x(3) / log.cfg.speed2);
    }
  }
  return s;
}

std::string csv_header(const SimLog& log) {
  const bool sat = log.cfg.scenario == ScenarioId::Satellite;
  const int n = sat ? 6 : 4;
  const int m = sat ? 3 : 2;
  std::string h = "t";
  for (int i = 1; i <= n; ++i) h += ",x" + std::to_string(i);
  for (int i = 1; i <= m; ++i) h += ",u" + std::to_string(i);
  for (int i = 1; i <= m; ++i) h += ",mu" + std::to_string(i);
  h += ",h,Hstar,case,feasible";
  for (int i = 1; i <= kSlackColumns; ++i) h += ",slack" + std::to_string(i);
  h += ",step_ms";
  return h;
}

void write_csv(std::ostream& out, const SimLog& log) {
  out << csv_header(log) << '\n';
  for (const SimRecord& r : log.records) {
    const ControlDecision& d = r.decision;
    out << format_number(r.t);
    for (int i = 0; i < r.x.size(); ++i) out << ',' << format_number(r.x(i));
    for (int i = 0; i < d.u.size(); ++i) out << ',' << format_number(d.u(i));
    for (int i = 0; i < d.mu.size(); ++i) out << ',' << format_number(d.mu(i));
    out << ',' << format_number(r.h) << ',' << format_number(d.h_star) << ','
        << (d.case_label ? case_name(*d.case_label) : "-") << ',' << (d.feasible ? 1 : 0);
    for (int i = 0; i < kSlackColumns; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      out << ',' << format_number(idx < d.slacks.size() ? d.slacks[idx] : 0.0);
    }
    out << ',' << format_number(r.step_ms) << '\n';
  }
}

void write_summary(std::ostream& out, const RunSummary& s) {
  auto kv = [&](const char* k, const std::string& v) { out << k << '=' << v << '\n'; };
  auto num = [&](const char* k, double v) { kv(k, format_number(v)); };
  kv("scenario", s.scenario);
  kv("controller", s.controller);
  kv("steps", std::to_string(s.steps));
  kv("aborted", s.aborted ? "1" : "0");
  num("max_h", s.max_h);
  num("dense_max_h", s.dense_max_h);
  num("final_h", s.final_h);
  num("max_hstar", s.max_hstar);
  num("max_control_norm", s.max_control_norm);
  num("total_deviation", s.total_deviation);
  num("mean_step_ms", s.mean_step_ms);
  num("max_step_ms", s.max_step_ms);
  kv("infeasible_steps", std::to_string(s.infeasible_steps));
  kv("controller_errors", std::to_string(s.controller_errors));
  kv("assumption_violations", std::to_string(s.assumption_violations));
  kv("control_jumps", std::to_string(s.control_jumps));
  num("first_control_time", s.first_control_time);
  num("threat_entry_time", s.threat_entry_time);
  if (s.scenario != "satellite") {
    kv("car1_crossed", s.car1_crossed ? "1" : "0");
    kv("car2_crossed", s.car2_crossed ? "1" : "0");
    num("min_speed_ratio1", s.min_speed_ratio1);
    num("min_speed_ratio2", s.min_speed_ratio2);
  }
}

}  // namespace pcbf
