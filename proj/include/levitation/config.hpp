#pragma once

#include "levitation/model.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace levitation {

/// Nominal parameter set: 0.3 mg mirror, R_t = 3 cm, R_b = 20 cm, L_0 = 18 cm,
/// 2 degree tilt, finesse 1000, 3 W of trapping power split equally, 1064 nm,
/// N2 at 300 K and 1e-8 bar.
SimulationConfig default_config();

/// Parses the key-value format described in docs/config.md. Unknown keys and
/// malformed values raise ConfigError with the offending line; the result is
/// validated before it is returned.
SimulationConfig parse_config(std::string_view text);

SimulationConfig load_config(const std::filesystem::path& path);

/// Writes every field in SI units with 17 significant digits, so that
/// parse_config(serialize_config(c)) reproduces c exactly.
std::string serialize_config(const SimulationConfig& config);

/// Throws ValidationError naming the first field that violates an invariant.
void validate_config(const SimulationConfig& config);

/// Cavity decay rate for the configured finesse and nominal length.
double config_linewidth(const SimulationConfig& config);

}  // namespace levitation
