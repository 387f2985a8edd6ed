#include "pcbf/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <variant>
#include <vector>

namespace pcbf {

namespace {

enum class Applies { All, Intersection, Satellite };

using Member = std::variant<double ScenarioConfig::*, int ScenarioConfig::*>;

struct KeySpec {
  const char* section;
  const char* name;
  Applies applies;
  Member member;
  // Open lower bound, or closed when `inclusive` is set.
  double lower;
  bool inclusive;
};

constexpr double kNoBound = -std::numeric_limits<double>::infinity();

const std::vector<KeySpec>& key_table() {
  using C = ScenarioConfig;
  static const std::vector<KeySpec> table = {
      {"horizon", "T", Applies::All, &C::horizon, 0.0, false},
      {"grid", "N", Applies::All, &C::intervals, 50.0, true},
      {"grid", "refine_tol", Applies::All, &C::refine_tol, 0.0, false},
      {"grid", "root_tol", Applies::All, &C::root_tol, 0.0, false},
      {"margin", "h_max", Applies::All, &C::h_max, 0.0, false},
      {"alpha", "gamma", Applies::All, &C::gamma, 0.0, true},
      {"dynamics", "rho", Applies::All, &C::rho, 0.0, false},
      {"dynamics", "gain", Applies::Intersection, &C::gain, 0.0, false},
      {"dynamics", "speed1", Applies::Intersection, &C::speed1, 0.0, false},
      {"dynamics", "speed2", Applies::Intersection, &C::speed2, 0.0, false},
      {"dynamics", "lane_half_width", Applies::Intersection, &C::lane_half_width, 0.0, false},
      {"dynamics", "z1", Applies::Intersection, &C::z1, kNoBound, false},
      {"dynamics", "zdot1", Applies::Intersection, &C::zdot1, kNoBound, false},
      {"dynamics", "z2", Applies::Intersection, &C::z2, kNoBound, false},
      {"dynamics", "zdot2", Applies::Intersection, &C::zdot2, kNoBound, false},
      {"dynamics", "mu_grav", Applies::Satellite, &C::mu_grav, 0.0, false},
      {"dynamics", "orbit_radius", Applies::Satellite, &C::orbit_radius, 0.0, false},
      {"dynamics", "conjunction_time", Applies::Satellite, &C::conjunction_time, 0.0, false},
      {"dynamics", "miss_distance", Applies::Satellite, &C::miss_distance, 0.0, true},
      {"dynamics", "speed_ratio", Applies::Satellite, &C::speed_ratio, 0.0, false},
      {"dynamics", "crossing_angle", Applies::Satellite, &C::crossing_angle, kNoBound, false},
      {"sim", "duration", Applies::All, &C::duration, 0.0, false},
      {"sim", "step", Applies::All, &C::step, 0.0, false},
      {"sim", "path_step", Applies::Satellite, &C::path_step, 0.0, false},
      {"sim", "slack_weight", Applies::All, &C::slack_weight, 0.0, false},
      {"sim", "ecbf_k1", Applies::All, &C::ecbf_k1, 0.0, false},
      {"sim", "ecbf_k2", Applies::All, &C::ecbf_k2, 0.0, false},
  };
  return table;
}

bool applies_to(Applies a, ScenarioId id) {
  const bool sat = id == ScenarioId::Satellite;
  return a == Applies::All || (a == Applies::Satellite) == sat;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& source, int line, const std::string& msg) {
  throw ConfigError(source + ":" + std::to_string(line) + ": " + msg);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct RawEntry {
  std::string value;
  int line;
};

}  // namespace

ScenarioConfig default_config(ScenarioId id) {
  ScenarioConfig c;
  c.scenario = id;
  if (id == ScenarioId::Satellite) {
    c.horizon = 1200.0;
    c.intervals = 2000;
    c.refine_tol = 1e-7;
    c.root_tol = 1e-10;
    c.rho = 1.0;
    c.h_max = 1.0;
    c.gamma = 0.94;
    c.duration = 1800.0;
    c.step = 1.0;
    c.path_step = 1.0;
    c.ecbf_k1 = 0.2;
    c.ecbf_k2 = 0.01;
    return c;
  }
  const std::vector<double> arc = conflict_arc_lengths(id, c.lane_half_width);
  // Both cars cruise at their target speed and would reach the conflict
  // point about 15 s in, car 2 leading by 0.1 s.
  c.z1 = arc[0] - 15.0 * c.speed1;
  c.z2 = arc[1] - 14.9 * c.speed2;
  c.zdot1 = c.speed1;
  c.zdot2 = c.speed2;
  return c;
}

ScenarioConfig parse_config_text(const std::string& text, const std::string& source) {
  std::map<std::string, RawEntry> raw;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(source, lineno, "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      static const char* kSections[] = {"horizon", "grid", "margin", "alpha", "dynamics", "sim"};
      if (std::find(std::begin(kSections), std::end(kSections), section) == std::end(kSections)) {
        fail(source, lineno, "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(source, lineno, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) fail(source, lineno, "expected key = value");
    const std::string full = section.empty() ? key : section + "." + key;
    if (raw.count(full)) fail(source, lineno, "duplicate key '" + full + "'");
    raw[full] = {value, lineno};
  }

  ScenarioId id = ScenarioId::IntersectionLeftTurn;
  if (auto it = raw.find("scenario"); it != raw.end()) {
    try {
      id = parse_scenario_id(it->second.value);
    } catch (const ConfigError& e) {
      fail(source, it->second.line, std::string("scenario: ") + e.what());
    }
    raw.erase(it);
  }
  ScenarioConfig cfg = default_config(id);
  if (auto it = raw.find("controller"); it != raw.end()) {
    try {
      cfg.controller = parse_controller_kind(it->second.value);
    } catch (const ConfigError& e) {
      fail(source, it->second.line, std::string("controller: ") + e.what());
    }
    raw.erase(it);
  }

  for (const KeySpec& spec : key_table()) {
    const std::string full = std::string(spec.section) + "." + spec.name;
    const auto it = raw.find(full);
    if (it == raw.end()) continue;
    const RawEntry entry = it->second;
    raw.erase(it);
    if (!applies_to(spec.applies, id)) {
      fail(source, entry.line, "key '" + full + "' does not apply to scenario " + to_string(id));
    }
    const std::string& v = entry.value;
    double numeric = 0.0;
    std::visit(
        [&](auto member) {
          using T = std::remove_reference_t<decltype(cfg.*member)>;
          T parsed{};
          const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), parsed);
          if (ec != std::errc() || ptr != v.data() + v.size()) {
            fail(source, entry.line, "key '" + full + "': cannot parse '" + v + "'");
          }
          if constexpr (std::is_floating_point_v<T>) {
            if (!std::isfinite(parsed)) fail(source, entry.line, "key '" + full + "' must be finite");
          }
          cfg.*member = parsed;
          numeric = static_cast<double>(parsed);
        },
        spec.member);
    const bool ok = spec.inclusive ? numeric >= spec.lower : numeric > spec.lower;
    if (!ok) {
      fail(source, entry.line,
           "key '" + full + "' out of range: must be " + (spec.inclusive ? ">= " : "> ") +
               format_double(spec.lower) + ", got " + v);
    }
  }
  if (!raw.empty()) {
    const auto& [key, entry] = *raw.begin();
    fail(source, entry.line, "unknown key '" + key + "'");
  }
  try {
    validate_config(cfg);
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

ScenarioConfig parse_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), path);
}

std::string serialize_config(const ScenarioConfig& cfg) {
  std::ostringstream out;
  out << "scenario = " << to_string(cfg.scenario) << '\n';
  out << "controller = " << to_string(cfg.controller) << '\n';
  std::string section;
  for (const KeySpec& spec : key_table()) {
    if (!applies_to(spec.applies, cfg.scenario)) continue;
    if (section != spec.section) {
      section = spec.section;
      out << "\n[" << section << "]\n";
    }
    out << spec.name << " = ";
    std::visit(
        [&](auto member) {
          const auto v = cfg.*member;
          if constexpr (std::is_floating_point_v<std::remove_cv_t<decltype(v)>>) {
            out << format_double(v);
          } else {
            out << v;
          }
        },
        spec.member);
    out << '\n';
  }
  return out.str();
}

void validate_config(const ScenarioConfig& c) {
  if (c.h_max < c.rho) {
    throw ConfigError("margin.h_max (" + format_double(c.h_max) +
                      ") must be at least dynamics.rho, the largest value h can take");
  }
  if (c.ecbf_k1 * c.ecbf_k1 < 4.0 * c.ecbf_k2) {
    throw ConfigError("sim.ecbf_k1 and sim.ecbf_k2 must satisfy k1^2 >= 4 k2 (real roots)");
  }
  const double ratio = c.duration / c.step;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
    throw ConfigError("sim.duration must be a whole number of sim.step");
  }
  if (c.scenario == ScenarioId::Satellite && !(c.conjunction_time <= c.duration)) {
    throw ConfigError("dynamics.conjunction_time must not exceed sim.duration");
  }
}

}  // namespace pcbf
