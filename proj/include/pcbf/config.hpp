#pragma once

#include <string>

#include "pcbf/scenarios.hpp"

namespace pcbf {

/// Pinned defaults for one scenario. See docs/config_schema.md.
ScenarioConfig default_config(ScenarioId id);

/// Parses the INI-style config text. `source` names the input in diagnostics.
ScenarioConfig parse_config_text(const std::string& text, const std::string& source = "<config>");
ScenarioConfig parse_config(const std::string& path);

/// Emits every key that applies to the scenario; parse_config_text inverts it exactly.
std::string serialize_config(const ScenarioConfig& cfg);

/// Range checks. Throws ConfigError naming the offending key.
void validate_config(const ScenarioConfig& cfg);

}  // namespace pcbf
