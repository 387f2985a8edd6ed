#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "checks.hpp"
#include "pcbf/config.hpp"
#include "pcbf/log.hpp"
#include "pcbf/report.hpp"

namespace fs = std::filesystem;
using namespace pcbf;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct RunOutput {
  SimLog log;
  RunSummary summary;
};

RunOutput execute(const ScenarioConfig& cfg) {
  const Scenario sc = build_scenario(cfg);
  const auto controller = make_controller(sc, cfg.controller);
  RunOutput out;
  out.log = run_closed_loop(sc, *controller);
  out.summary = summarize(sc, out.log);
  return out;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream f(path);
  if (!f) throw Error("cannot open '" + path.string() + "' for writing");
  body(f);
  f.flush();
  if (!f) throw Error("write to '" + path.string() + "' failed");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
}

int run_command(const std::string& config_path, const std::string& out_dir) {
  const ScenarioConfig cfg = parse_config(config_path);
  ensure_dir(out_dir);
  const RunOutput r = execute(cfg);
  write_file(fs::path(out_dir) / "trace.csv", [&](std::ostream& o) { write_csv(o, r.log); });
  write_file(fs::path(out_dir) / "summary.txt", [&](std::ostream& o) { write_summary(o, r.summary); });
  std::cout << to_string(cfg.scenario) << '/' << to_string(cfg.controller)
            << ": steps=" << r.summary.steps << " max_h=" << format_number(r.summary.max_h)
            << " max_control_norm=" << format_number(r.summary.max_control_norm) << '\n';
  if (r.log.aborted) {
    std::cerr << "pcbf: run aborted: " << r.log.abort_reason << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

void write_compare_csv(std::ostream& o, const std::vector<RunSummary>& rows) {
  double pcbf_norm = std::numeric_limits<double>::quiet_NaN();
  for (const RunSummary& s : rows) {
    if (s.controller == "pcbf") pcbf_norm = s.max_control_norm;
  }
  o << "controller,steps,aborted,max_h,dense_max_h,final_h,max_hstar,max_control_norm,"
       "control_norm_ratio,total_deviation,mean_step_ms,max_step_ms,infeasible_steps,"
       "controller_errors,assumption_violations,car1_crossed,car2_crossed\n";
  for (const RunSummary& s : rows) {
    const bool sat = s.scenario == "satellite";
    o << s.controller << ',' << s.steps << ',' << (s.aborted ? 1 : 0) << ','
      << format_number(s.max_h) << ',' << format_number(s.dense_max_h) << ','
      << format_number(s.final_h) << ',' << format_number(s.max_hstar) << ','
      << format_number(s.max_control_norm) << ','
      << format_number(pcbf_norm > 0.0 ? s.max_control_norm / pcbf_norm
                                       : std::numeric_limits<double>::quiet_NaN())
      << ',' << format_number(s.total_deviation) << ',' << format_number(s.mean_step_ms) << ','
      << format_number(s.max_step_ms) << ',' << s.infeasible_steps << ',' << s.controller_errors
      << ',' << s.assumption_violations << ',' << (sat ? "-" : s.car1_crossed ? "1" : "0") << ','
      << (sat ? "-" : s.car2_crossed ? "1" : "0") << '\n';
  }
}

int compare_command(const std::string& config_path, const std::vector<std::string>& names,
                    const std::string& out_dir) {
  const ScenarioConfig base = parse_config(config_path);
  std::vector<ControllerKind> kinds;
  for (const std::string& n : names) kinds.push_back(parse_controller_kind(n));
  ensure_dir(out_dir);

  // Each run builds its own scenario, so nothing mutable is shared.
  std::vector<std::future<RunOutput>> jobs;
  for (ControllerKind k : kinds) {
    ScenarioConfig cfg = base;
    cfg.controller = k;
    jobs.push_back(std::async(std::launch::async, execute, cfg));
  }

  std::vector<RunSummary> rows;
  bool aborted = false;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const RunOutput r = jobs[i].get();
    const std::string name = to_string(kinds[i]);
    write_file(fs::path(out_dir) / (name + ".csv"), [&](std::ostream& o) { write_csv(o, r.log); });
    write_file(fs::path(out_dir) / (name + "_summary.txt"),
               [&](std::ostream& o) { write_summary(o, r.summary); });
    if (r.log.aborted) {
      std::cerr << "pcbf: " << name << " run aborted: " << r.log.abort_reason << '\n';
      aborted = true;
    }
    rows.push_back(r.summary);
  }
  write_file(fs::path(out_dir) / "compare.csv", [&](std::ostream& o) { write_compare_csv(o, rows); });
  write_compare_csv(std::cout, rows);
  return aborted ? kExitRuntime : kExitOk;
}

struct SelftestLine {
  std::string name;
  bool passed;
  std::string detail;
};

int selftest_command() {
  std::vector<SelftestLine> lines;
  auto add = [&](std::string name, bool ok, std::string detail) {
    lines.push_back({std::move(name), ok, std::move(detail)});
    std::printf("%s %-28s %s\n", ok ? "PASS" : "FAIL", lines.back().name.c_str(),
                lines.back().detail.c_str());
    std::fflush(stdout);
  };

  const checks::QpStats qp = checks::qp_oracle(50, 11);
  add("filter-vs-grid", qp.mismatches == 0,
      "instances=" + std::to_string(qp.instances) + " worst=" + format_number(qp.worst_error));

  for (ScenarioId id : {ScenarioId::IntersectionLeftTurn, ScenarioId::IntersectionCross,
                        ScenarioId::Satellite}) {
    const Scenario sc = build_scenario(default_config(id));
    const std::string tag = to_string(id);
    const checks::PathStats p = checks::path_contracts(sc, 20, 3);
    const bool path_ok = p.identity_exact && p.ode_residual <= 1e-6 && p.semigroup <= 1e-6 &&
                         p.sensitivity_ratio <= 1.0 && p.energy_drift <= 1e-8;
    add("path:" + tag, path_ok,
        "ode=" + format_number(p.ode_residual) + " semigroup=" + format_number(p.semigroup) +
            " sens=" + format_number(p.sensitivity_ratio) + " energy=" + format_number(p.energy_drift));

    const checks::SubsetStats s = checks::subset_property(sc, id == ScenarioId::Satellite ? 50 : 300, 5);
    add("subset:" + tag, s.violations == 0 && s.errors == 0,
        "samples=" + std::to_string(s.samples) + " violations=" + std::to_string(s.violations) +
            " errors=" + std::to_string(s.errors));
  }

  ScenarioConfig cfg = default_config(ScenarioId::IntersectionLeftTurn);
  cfg.duration = 20.0;
  const Scenario sc = build_scenario(cfg);
  const RunOutput run = execute(cfg);
  add("safety:intersection_left_turn", run.summary.max_h <= 1e-3 * cfg.rho,
      "max_h=" + format_number(run.summary.max_h));
  const checks::DerivativeStats d = checks::derivative_oracle(sc, {&run.log}, 10, 1.0, 7);
  const int failed = d.failed[0] + d.failed[1] + d.failed[2];
  add("derivative:intersection", failed == 0 && d.checked[0] + d.checked[1] + d.checked[2] > 0,
      "checked I/II/III=" + std::to_string(d.checked[0]) + "/" + std::to_string(d.checked[1]) + "/" +
          std::to_string(d.checked[2]) + " worst_ratio=" + format_number(d.worst_ratio));

  for (const SelftestLine& l : lines) {
    if (!l.passed) return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Predictive control barrier function simulator"};
  app.require_subcommand(1);
  app.footer("Set PCBF_LOG=error|warn|info|debug to change diagnostic verbosity.");

  std::string config_path;
  std::string out_dir;
  std::vector<std::string> controllers{"pcbf", "ecbf", "none"};

  CLI::App* run = app.add_subcommand("run", "Run one closed-loop simulation");
  run->add_option("--config", config_path, "Scenario config file")->required();
  run->add_option("--out", out_dir, "Output directory")->required();

  CLI::App* compare = app.add_subcommand("compare", "Run several controllers on one scenario");
  compare->add_option("--config", config_path, "Scenario config file")->required();
  compare->add_option("--controllers", controllers, "Comma-separated controller list")
      ->delimiter(',');
  compare->add_option("--out", out_dir, "Output directory")->required();

  CLI::App* selftest = app.add_subcommand("selftest", "Run the property checks on small instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (run->parsed()) return run_command(config_path, out_dir);
    if (compare->parsed()) return compare_command(config_path, controllers, out_dir);
    if (selftest->parsed()) return selftest_command();
  } catch (const ConfigError& e) {
    std::cerr << "pcbf: config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "pcbf: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
