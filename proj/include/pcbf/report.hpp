#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "pcbf/simulation.hpp"

namespace pcbf {

/// Slack columns in the trace CSV; matches the filter's slack-row cap.
inline constexpr int kSlackColumns = kMaxSlackRows;

struct RunSummary {
  std::string scenario;
  std::string controller;
  std::size_t steps = 0;
  bool aborted = false;
  double max_h = 0.0;
  double dense_max_h = 0.0;
  double final_h = 0.0;
  double max_hstar = 0.0;
  double max_control_norm = 0.0;
  double total_deviation = 0.0;
  double mean_step_ms = 0.0;
  double max_step_ms = 0.0;
  int infeasible_steps = 0;
  int controller_errors = 0;
  int assumption_violations = 0;
  int control_jumps = 0;
  /// Time of the first step with u != 0, or -1.
  double first_control_time = -1.0;
  /// Time of the first step with H* > -m(T)/2, or -1.
  double threat_entry_time = -1.0;
  // Intersection only.
  bool car1_crossed = false;
  bool car2_crossed = false;
  double min_speed_ratio1 = 0.0;
  double min_speed_ratio2 = 0.0;
};

RunSummary summarize(const Scenario& scenario, const SimLog& log);

std::string csv_header(const SimLog& log);
void write_csv(std::ostream& out, const SimLog& log);
void write_summary(std::ostream& out, const RunSummary& s);

/// 17 significant digits; "nan" for NaN.
std::string format_number(double v);

}  // namespace pcbf
