#pragma once

// JSON scenario documents.
//
// Top-level keys: horizon_slots, rho1, rho2, mode ("auction" | "solo"), seed,
// price_bounds {p_min, p_max}, price {path, column, seed_offset}, and
// microgrids (array). Keys left out keep the default-scenario value; an
// absent microgrids array keeps the six default MGs. Unknown keys are errors.

#include <filesystem>
#include <string>

#include "mgtrade/sim.hpp"

namespace mgtrade {

/// Parses and finalizes. Throws ConfigError (bad values, unknown keys) or
/// DataError (not JSON).
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Fully resolved document (V written out, v_fraction dropped); parsing it
/// back gives the same run.
std::string dump_config(const ScenarioConfig& config);

Mode parse_mode(const std::string& name);

}  // namespace mgtrade
