#pragma once

#include <string>

#include "hmpc/sim_harness.hpp"

namespace hmpc {

// Strict key-value scenario configuration with [section] headers and '#'
// comments. Unknown sections or keys are errors; out-of-range values are
// rejected with the legal range in the message. Omitted keys keep the
// built-in defaults.
Scenario parse_scenario(const std::string& text);

Scenario load_scenario_file(const std::string& path);

// Canonical serialization; parse(serialize(s)) reproduces s exactly.
std::string serialize_scenario(const Scenario& s);

}  // namespace hmpc
