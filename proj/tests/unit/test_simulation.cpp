#include <doctest.h>

#include <sstream>

#include "pcbf/config.hpp"
#include "pcbf/report.hpp"

using namespace pcbf;

namespace {

ScenarioConfig short_run(ControllerKind k) {
  ScenarioConfig c = default_config(ScenarioId::IntersectionLeftTurn);
  c.controller = k;
  c.duration = 4.0;
  return c;
}

std::string strip_timing(const SimLog& log) {
  SimLog copy = log;
  for (SimRecord& r : copy.records) r.step_ms = 0.0;
  std::ostringstream out;
  write_csv(out, copy);
  return out.str();
}

}  // namespace

TEST_CASE("csv header for both scenario shapes") {
  SimLog log;
  log.cfg = default_config(ScenarioId::IntersectionCross);
  CHECK(csv_header(log) ==
        "t,x1,x2,x3,x4,u1,u2,mu1,mu2,h,Hstar,case,feasible,slack1,slack2,slack3,step_ms");
  log.cfg = default_config(ScenarioId::Satellite);
  CHECK(csv_header(log) ==
        "t,x1,x2,x3,x4,x5,x6,u1,u2,u3,mu1,mu2,mu3,h,Hstar,case,feasible,slack1,slack2,slack3,"
        "step_ms");
}

TEST_CASE("every csv row has the header's column count") {
  const SimLog log = run_closed_loop(short_run(ControllerKind::Pcbf));
  std::ostringstream out;
  write_csv(out, log);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  const auto columns = std::count(line.begin(), line.end(), ',');
  int rows = 0;
  while (std::getline(in, line)) {
    CHECK(std::count(line.begin(), line.end(), ',') == columns);
    ++rows;
  }
  CHECK(rows == 81);
}

TEST_CASE("identical configs give identical logs") {
  for (ControllerKind k : {ControllerKind::Pcbf, ControllerKind::Ecbf, ControllerKind::None}) {
    CHECK(strip_timing(run_closed_loop(short_run(k))) == strip_timing(run_closed_loop(short_run(k))));
  }
}

TEST_CASE("open-loop controllers") {
  const SimLog none = run_closed_loop(short_run(ControllerKind::None));
  for (const SimRecord& r : none.records) CHECK(r.decision.u.isZero(0.0));
  const SimLog nominal = run_closed_loop(short_run(ControllerKind::Nominal));
  for (const SimRecord& r : nominal.records) CHECK(r.decision.u == r.decision.mu);
  CHECK(std::isnan(none.records.front().decision.h_star));
}

TEST_CASE("summary agrees with the log it was built from") {
  const ScenarioConfig cfg = short_run(ControllerKind::Pcbf);
  const Scenario sc = build_scenario(cfg);
  const auto ctl = make_controller(sc, cfg.controller);
  const SimLog log = run_closed_loop(sc, *ctl);
  const RunSummary s = summarize(sc, log);
  double max_h = -1e300, max_u = 0.0, dev = 0.0;
  for (std::size_t k = 0; k < log.records.size(); ++k) {
    const SimRecord& r = log.records[k];
    max_h = std::max(max_h, r.h);
    max_u = std::max(max_u, r.decision.u.norm());
    if (k + 1 < log.records.size()) dev += (r.decision.u - r.decision.mu).norm() * cfg.step;
  }
  CHECK(s.steps == log.records.size());
  CHECK(s.max_h == max_h);
  CHECK(s.max_control_norm == max_u);
  CHECK(s.total_deviation == doctest::Approx(dev));
  CHECK(s.dense_max_h >= s.max_h);
  CHECK(s.final_h == log.records.back().h);

  std::ostringstream out;
  write_summary(out, s);
  CHECK(out.str().rfind("scenario=intersection_left_turn\ncontroller=pcbf\nsteps=81\n", 0) == 0);
}

TEST_CASE("non-conflicting timing stays safe without any control") {
  ScenarioConfig cfg = short_run(ControllerKind::None);
  cfg.duration = 30.0;
  cfg.z1 -= 60.0;  // car 1 arrives 12 s late
  const SimLog log = run_closed_loop(cfg);
  for (const SimRecord& r : log.records) CHECK(r.h < 0.0);
}
