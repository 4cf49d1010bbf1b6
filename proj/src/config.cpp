#include "levitation/config.hpp"

#include "levitation/errors.hpp"
#include "levitation/optics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

namespace levitation {

namespace {

enum class Quantity {
    dimensionless,
    mass,
    length,
    angle,
    power,
    angular_frequency,
    frequency,
    pressure,
    temperature,
    inverse_length,
    spectral_density,
};

// A unit either shifts the decimal exponent (exact for SI prefixes) or
// multiplies by a factor. "kappa" is resolved after the whole file is read.
struct Unit {
    int decimal_shift = 0;
    double factor = 1.0;
    bool per_kappa = false;
};

const std::map<std::string, Unit>& units_for(Quantity quantity) {
    static const std::map<Quantity, std::map<std::string, Unit>> table = {
        {Quantity::dimensionless, {{"", {}}}},
        {Quantity::mass, {{"", {}}, {"kg", {}}, {"g", {-3}}, {"mg", {-6}}, {"ug", {-9}}, {"u", {0, 1.66053906660e-27}}}},
        {Quantity::length, {{"", {}}, {"m", {}}, {"cm", {-2}}, {"mm", {-3}}, {"um", {-6}}, {"nm", {-9}}}},
        {Quantity::angle, {{"", {}}, {"rad", {}}, {"mrad", {-3}}, {"deg", {0, constants::pi / 180.0}}}},
        {Quantity::power, {{"", {}}, {"W", {}}, {"kW", {3}}, {"mW", {-3}}, {"uW", {-6}}}},
        {Quantity::angular_frequency,
         {{"", {}},
          {"rad/s", {}},
          {"Hz", {0, 2.0 * constants::pi}},
          {"kHz", {3, 2.0 * constants::pi}},
          {"MHz", {6, 2.0 * constants::pi}},
          {"kappa", {0, 1.0, true}}}},
        {Quantity::frequency, {{"", {}}, {"Hz", {}}, {"kHz", {3}}, {"MHz", {6}}}},
        {Quantity::pressure, {{"", {}}, {"Pa", {}}, {"bar", {5}}, {"mbar", {2}}, {"Torr", {0, 101325.0 / 760.0}}}},
        {Quantity::temperature, {{"", {}}, {"K", {}}}},
        {Quantity::inverse_length, {{"", {}}, {"1/m", {}}}},
        {Quantity::spectral_density, {{"", {}}, {"1/Hz", {}}}},
    };
    return table.at(quantity);
}

std::string trim(std::string_view text) {
    auto begin = text.begin();
    auto end = text.end();
    while (begin != end && std::isspace(static_cast<unsigned char>(*begin)))
        ++begin;
    while (end != begin && std::isspace(static_cast<unsigned char>(*(end - 1))))
        --end;
    return std::string(begin, end);
}

// Parses a decimal literal and applies a power-of-ten shift textually so that
// "0.3 mg" becomes exactly the double nearest to 3e-7.
double parse_number(const std::string& literal, int decimal_shift, int line) {
    std::string mantissa = literal;
    long exponent = 0;
    const auto e = literal.find_first_of("eE");
    if (e != std::string::npos) {
        mantissa = literal.substr(0, e);
        const std::string exponent_text = literal.substr(e + 1);
        char* end = nullptr;
        exponent = std::strtol(exponent_text.c_str(), &end, 10);
        if (exponent_text.empty() || *end != '\0')
            throw ConfigError("malformed number '" + literal + "'", line);
    }
    const std::string shifted = mantissa + "e" + std::to_string(exponent + decimal_shift);
    char* end = nullptr;
    const double value = std::strtod(shifted.c_str(), &end);
    if (mantissa.empty() || *end != '\0')
        throw ConfigError("malformed number '" + literal + "'", line);
    if (!std::isfinite(value))
        throw ConfigError("non-finite number '" + literal + "'", line);
    return value;
}

struct PendingKappa {
    double* target;
    double value;
};

struct Field {
    Quantity quantity;
    std::function<std::vector<double*>(SimulationConfig&)> targets;
    double spread = 1.0;  // value divided across targets ("_total" keys)
};

std::vector<double*> all3(std::array<double, kCavities>& values) {
    return {&values[0], &values[1], &values[2]};
}

std::map<std::string, Field> build_fields() {
    std::map<std::string, Field> fields;
    auto scalar = [&](const std::string& key, Quantity quantity, auto member) {
        fields[key] = Field{quantity, [member](SimulationConfig& c) { return std::vector<double*>{member(c)}; }};
    };
    scalar("mirror.mass", Quantity::mass, [](SimulationConfig& c) { return &c.mirror.mass; });
    scalar("mirror.radius_of_curvature", Quantity::length, [](SimulationConfig& c) { return &c.mirror.radius_of_curvature; });
    scalar("mirror.diameter", Quantity::length, [](SimulationConfig& c) { return &c.mirror.diameter; });
    scalar("mirror.emissivity", Quantity::dimensionless, [](SimulationConfig& c) { return &c.mirror.emissivity; });
    scalar("mirror.absorption_coefficient", Quantity::inverse_length,
           [](SimulationConfig& c) { return &c.mirror.absorption_coefficient; });
    scalar("mirror.coating_absorption", Quantity::dimensionless, [](SimulationConfig& c) { return &c.mirror.coating_absorption; });
    scalar("tripod.radius_of_curvature", Quantity::length, [](SimulationConfig& c) { return &c.geometry.radius_bottom; });
    scalar("tripod.nominal_length", Quantity::length, [](SimulationConfig& c) { return &c.geometry.nominal_length; });
    scalar("tripod.tilt", Quantity::angle, [](SimulationConfig& c) { return &c.geometry.tilt; });
    scalar("laser.wavelength", Quantity::length, [](SimulationConfig& c) { return &c.drive.wavelength; });
    scalar("laser.finesse", Quantity::dimensionless, [](SimulationConfig& c) { return &c.drive.finesse; });
    scalar("env.pressure", Quantity::pressure, [](SimulationConfig& c) { return &c.environment.pressure; });
    scalar("env.temperature", Quantity::temperature, [](SimulationConfig& c) { return &c.environment.temperature; });
    scalar("env.gas_mass", Quantity::mass, [](SimulationConfig& c) { return &c.environment.gas_mass; });
    scalar("env.molecule_diameter", Quantity::length, [](SimulationConfig& c) { return &c.environment.molecule_diameter; });
    scalar("noise.intensity_psd", Quantity::spectral_density,
           [](SimulationConfig& c) { return &c.environment.intensity_noise.level; });
    scalar("noise.bandwidth", Quantity::frequency, [](SimulationConfig& c) { return &c.environment.intensity_noise.bandwidth; });

    using Member = std::array<double, kCavities> BeamDrive::*;
    auto per_cavity = [&](const std::string& stem, Quantity quantity, Member member, bool with_total) {
        fields[stem] = Field{quantity, [member](SimulationConfig& c) { return all3(c.drive.*member); }};
        if (with_total)
            fields[stem + "_total"] =
                Field{quantity, [member](SimulationConfig& c) { return all3(c.drive.*member); }, 1.0 / kCavities};
        for (int n = 0; n < kCavities; ++n)
            fields[stem + "." + std::to_string(n + 1)] =
                Field{quantity, [member, n](SimulationConfig& c) { return std::vector<double*>{&(c.drive.*member)[n]}; }};
    };
    per_cavity("trap.power", Quantity::power, &BeamDrive::trap_power, true);
    per_cavity("trap.detuning", Quantity::angular_frequency, &BeamDrive::trap_detuning, false);
    per_cavity("trap.frequency_offset", Quantity::angular_frequency, &BeamDrive::frequency_offset, false);
    per_cavity("cool.power", Quantity::power, &BeamDrive::cool_power, true);
    per_cavity("cool.detuning", Quantity::angular_frequency, &BeamDrive::cool_detuning, false);
    return fields;
}

const std::map<std::string, Field>& fields() {
    static const auto table = build_fields();
    return table;
}

std::string format_double(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof buffer, "%.17g", value);
    return buffer;
}

void require(bool condition, const std::string& field, const std::string& message) {
    if (!condition)
        throw ValidationError(field, message);
}

}  // namespace

SimulationConfig default_config() {
    SimulationConfig config;
    config.mirror = MirrorSpec{};
    config.geometry = TripodGeometry::symmetric(0.20, config.mirror.radius_of_curvature, 0.18,
                                                2.0 * constants::pi / 180.0);
    config.drive.wavelength = 1064e-9;
    config.drive.finesse = 1000.0;
    config.drive.trap_power = {1.0, 1.0, 1.0};
    const double kappa = linewidth(config.drive.finesse, config.geometry.nominal_length);
    config.drive.trap_detuning.fill(0.5 * kappa);
    config.drive.cool_power = {0.0, 0.0, 0.0};
    config.drive.cool_detuning_auto = true;
    config.environment = Environment{};
    // White fractional intensity noise at the 7e-4 RMS over 300 kHz level.
    config.environment.intensity_noise.level = 7e-4 * 7e-4 / 3e5;
    return config;
}

SimulationConfig parse_config(std::string_view text) {
    SimulationConfig config = default_config();
    const double default_kappa_share = config.drive.trap_detuning[0] /
                                       linewidth(config.drive.finesse, config.geometry.nominal_length);
    std::vector<PendingKappa> pending;
    // Trap detunings default to 0.5 kappa of the final finesse and length.
    for (auto& d : config.drive.trap_detuning)
        pending.push_back({&d, default_kappa_share});

    std::istringstream stream{std::string(text)};
    std::string raw;
    int line_number = 0;
    while (std::getline(stream, raw)) {
        ++line_number;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty())
            continue;
        const auto equals = line.find('=');
        if (equals == std::string::npos)
            throw ConfigError("expected 'key = value'", line_number);
        const std::string key = trim(line.substr(0, equals));
        const std::string rhs = trim(line.substr(equals + 1));
        if (rhs.empty())
            throw ConfigError("missing value for '" + key + "'", line_number);

        if (key == "cool.detuning" && rhs == "auto") {
            config.drive.cool_detuning_auto = true;
            continue;
        }
        const auto field = fields().find(key);
        if (field == fields().end())
            throw ConfigError("unknown key '" + key + "'", line_number);

        const auto space = rhs.find_first_of(" \t");
        const std::string literal = rhs.substr(0, space);
        const std::string unit_name = space == std::string::npos ? "" : trim(rhs.substr(space));
        const auto& units = units_for(field->second.quantity);
        const auto unit = units.find(unit_name);
        if (unit == units.end())
            throw ConfigError("unit '" + unit_name + "' not valid for '" + key + "'", line_number);

        const double value = parse_number(literal, unit->second.decimal_shift, line_number) *
                             unit->second.factor * field->second.spread;
        for (double* target : field->second.targets(config)) {
            std::erase_if(pending, [&](const PendingKappa& p) { return p.target == target; });
            if (unit->second.per_kappa)
                pending.push_back({target, value});
            else
                *target = value;
        }
        if (key.starts_with("cool.detuning"))
            config.drive.cool_detuning_auto = false;
    }

    config.geometry = TripodGeometry::symmetric(config.geometry.radius_bottom, config.mirror.radius_of_curvature,
                                                config.geometry.nominal_length, config.geometry.tilt);
    if (!pending.empty()) {
        require(config.drive.finesse > 1.0, "laser.finesse", "must exceed 1");
        const double kappa = linewidth(config.drive.finesse, config.geometry.nominal_length);
        for (const auto& p : pending)
            *p.target = p.value * kappa;
    }
    validate_config(config);
    return config;
}

SimulationConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config file '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string serialize_config(const SimulationConfig& config) {
    std::ostringstream out;
    auto put = [&](const std::string& key, double value) { out << key << " = " << format_double(value) << '\n'; };
    out << "# all values in SI units\n";
    put("mirror.mass", config.mirror.mass);
    put("mirror.radius_of_curvature", config.mirror.radius_of_curvature);
    put("mirror.diameter", config.mirror.diameter);
    put("mirror.emissivity", config.mirror.emissivity);
    put("mirror.absorption_coefficient", config.mirror.absorption_coefficient);
    put("mirror.coating_absorption", config.mirror.coating_absorption);
    put("tripod.radius_of_curvature", config.geometry.radius_bottom);
    put("tripod.nominal_length", config.geometry.nominal_length);
    put("tripod.tilt", config.geometry.tilt);
    put("laser.wavelength", config.drive.wavelength);
    put("laser.finesse", config.drive.finesse);
    for (int n = 0; n < kCavities; ++n) {
        const std::string suffix = "." + std::to_string(n + 1);
        put("trap.power" + suffix, config.drive.trap_power[n]);
        put("trap.detuning" + suffix, config.drive.trap_detuning[n]);
        put("trap.frequency_offset" + suffix, config.drive.frequency_offset[n]);
        put("cool.power" + suffix, config.drive.cool_power[n]);
    }
    if (config.drive.cool_detuning_auto) {
        out << "cool.detuning = auto\n";
    } else {
        for (int n = 0; n < kCavities; ++n)
            put("cool.detuning." + std::to_string(n + 1), config.drive.cool_detuning[n]);
    }
    put("env.pressure", config.environment.pressure);
    put("env.temperature", config.environment.temperature);
    put("env.gas_mass", config.environment.gas_mass);
    put("env.molecule_diameter", config.environment.molecule_diameter);
    put("noise.intensity_psd", config.environment.intensity_noise.level);
    put("noise.bandwidth", config.environment.intensity_noise.bandwidth);
    return out.str();
}

void validate_config(const SimulationConfig& config) {
    const auto& mirror = config.mirror;
    require(mirror.mass > 0.0, "mirror.mass", "must be positive");
    require(mirror.radius_of_curvature > 0.0, "mirror.radius_of_curvature", "must be positive");
    require(mirror.diameter > 0.0, "mirror.diameter", "must be positive");
    require(mirror.emissivity > 0.0 && mirror.emissivity <= 1.0, "mirror.emissivity", "must lie in (0, 1]");
    require(mirror.absorption_coefficient >= 0.0, "mirror.absorption_coefficient", "must be non-negative");
    require(mirror.coating_absorption >= 0.0 && mirror.coating_absorption <= 1.0, "mirror.coating_absorption",
            "must lie in [0, 1]");

    const auto& geometry = config.geometry;
    require(geometry.radius_bottom > mirror.radius_of_curvature, "tripod.radius_of_curvature",
            "must exceed the top mirror radius");
    require(geometry.tilt >= 0.0 && geometry.tilt < 0.5 * constants::pi, "tripod.tilt", "must lie in [0, pi/2)");
    // Optical stability of a concave(R_b)/convex(R_t) resonator: 0 <= g_b g_t <= 1.
    const double length = geometry.nominal_length;
    const double g_product = (1.0 - length / geometry.radius_bottom) * (1.0 + length / mirror.radius_of_curvature);
    require(length > geometry.radius_bottom - mirror.radius_of_curvature && g_product >= -1e-12 &&
                g_product <= 1.0 + 1e-12,
            "tripod.nominal_length", "outside the optical stability window");
    const Vec3 centroid = geometry.centroid();
    const Eigen::AngleAxisd turn(2.0 * constants::pi / kCavities, Vec3::UnitZ());
    for (int n = 0; n < kCavities; ++n) {
        const Vec3 rotated = centroid + turn * (geometry.q[n] - centroid);
        require((rotated - geometry.q[(n + 1) % kCavities]).norm() <= 1e-12 * (1.0 + geometry.q[n].norm()),
                "tripod.q", "lower mirrors are not related by 120 degree rotation");
    }

    const auto& drive = config.drive;
    require(drive.finesse > 1.0, "laser.finesse", "must exceed 1");
    require(drive.wavelength > 0.0, "laser.wavelength", "must be positive");
    for (int n = 0; n < kCavities; ++n) {
        require(drive.trap_power[n] >= 0.0, "trap.power." + std::to_string(n + 1), "must be non-negative");
        require(drive.cool_power[n] >= 0.0, "cool.power." + std::to_string(n + 1), "must be non-negative");
    }

    const auto& env = config.environment;
    require(env.pressure >= 0.0, "env.pressure", "must be non-negative");
    require(env.temperature > 0.0, "env.temperature", "must be positive");
    require(env.gas_mass > 0.0, "env.gas_mass", "must be positive");
    require(env.molecule_diameter > 0.0, "env.molecule_diameter", "must be positive");
    require(env.intensity_noise.level >= 0.0, "noise.intensity_psd", "must be non-negative");
    require(env.intensity_noise.bandwidth >= 0.0, "noise.bandwidth", "must be non-negative");
}

double config_linewidth(const SimulationConfig& config) {
    return linewidth(config.drive.finesse, config.geometry.nominal_length);
}

}  // namespace levitation
