#include <doctest.h>

#include <string>

#include "pcbf/config.hpp"

using namespace pcbf;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config_text(text, "cfg");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("minimal config fills documented defaults") {
  const ScenarioConfig c = parse_config_text("scenario = intersection_left_turn\ncontroller = pcbf\n");
  CHECK(c == default_config(ScenarioId::IntersectionLeftTurn));
  CHECK(c.horizon == 10.0);
  CHECK(parse_config_text("scenario = satellite\n").rho == 1.0);
}

TEST_CASE("serialize and parse are inverse") {
  for (ScenarioId id : {ScenarioId::IntersectionCross, ScenarioId::IntersectionLeftTurn,
                        ScenarioId::Satellite}) {
    ScenarioConfig c = default_config(id);
    c.controller = ControllerKind::Ecbf;
    c.gamma = 0.1 + 1.0 / 3.0;
    c.intervals = 321;
    CHECK(parse_config_text(serialize_config(c)) == c);
  }
}

TEST_CASE("sections, comments and whitespace") {
  const ScenarioConfig c = parse_config_text(
      "# demo\nscenario=intersection_cross ; trailing\n\n[horizon]\n  T = 8.5\n[grid]\nN=120\n");
  CHECK(c.scenario == ScenarioId::IntersectionCross);
  CHECK(c.horizon == 8.5);
  CHECK(c.intervals == 120);
}

TEST_CASE("diagnostics name the key and line") {
  CHECK(error_of("scenario = satellite\n[sim]\nbogus = 1\n").find("cfg:3") != std::string::npos);
  CHECK(error_of("scenario = satellite\n[sim]\nbogus = 1\n").find("sim.bogus") != std::string::npos);
  CHECK(error_of("[horizon]\nT = -1\n").find("cfg:2") != std::string::npos);
  CHECK(error_of("[horizon]\nT = -1\n").find("horizon.T") != std::string::npos);
  CHECK(error_of("[grid]\nN = 10\n").find("grid.N") != std::string::npos);
  CHECK(error_of("[horizon]\nT = 1\nT = 2\n").find("duplicate") != std::string::npos);
  CHECK(error_of("[dynamics]\nmu_grav = 1\n").find("does not apply") != std::string::npos);
  CHECK(error_of("[horizon]\nT = 1x\n").find("cannot parse") != std::string::npos);
  CHECK(error_of("[nowhere]\n").find("unknown section") != std::string::npos);
  CHECK(error_of("scenario = mars\n").find("cfg:1") != std::string::npos);
  CHECK(error_of("[margin]\nh_max = 1\n").find("rho") != std::string::npos);
}

TEST_CASE("missing file is a config error") {
  CHECK_THROWS_AS(parse_config("/nonexistent/pcbf.conf"), ConfigError);
}

TEST_CASE("shipped configs match the scenario defaults") {
  const std::string dir = PCBF_CONFIG_DIR;
  const std::pair<const char*, ScenarioId> files[] = {
      {"/intersection_left_turn.conf", ScenarioId::IntersectionLeftTurn},
      {"/intersection_cross.conf", ScenarioId::IntersectionCross},
      {"/satellite.conf", ScenarioId::Satellite},
  };
  for (const auto& [name, id] : files) {
    CAPTURE(name);
    CHECK(parse_config(dir + name) == default_config(id));
  }
}
