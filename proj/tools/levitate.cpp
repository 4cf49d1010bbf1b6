#include "levitation/budgets.hpp"
#include "levitation/config.hpp"
#include "levitation/dynamics.hpp"
#include "levitation/errors.hpp"
#include "levitation/io.hpp"
#include "levitation/modes.hpp"
#include "levitation/optics.hpp"
#include "levitation/potential.hpp"
#include "levitation/traps.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifndef LEVITATE_VERSION
#define LEVITATE_VERSION "0.0.0"
#endif

using namespace levitation;
using Json = nlohmann::ordered_json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

struct Common {
    std::string config_path;
    std::string out_dir;
    unsigned threads = 0;
};

SimulationConfig read_config(const Common& common) {
    return common.config_path.empty() ? default_config() : load_config(common.config_path);
}

std::vector<double> split_numbers(const std::string& text, char separator) {
    std::vector<double> values;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, separator)) {
        std::size_t used = 0;
        double value = 0.0;
        try {
            value = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used])))
            ++used;
        if (item.empty() || used != item.size())
            throw UsageError("not a number: '" + item + "'");
        values.push_back(value);
    }
    return values;
}

/// "a:b:n" gives n evenly spaced values from a to b; otherwise a comma list.
std::vector<double> parse_grid(const std::string& text) {
    if (text.find(':') == std::string::npos)
        return split_numbers(text, ',');
    const auto parts = split_numbers(text, ':');
    if (parts.size() != 3 || parts[2] < 1 || parts[2] != std::floor(parts[2]))
        throw UsageError("grid must be start:stop:count");
    const auto count = static_cast<int>(parts[2]);
    std::vector<double> values;
    for (int i = 0; i < count; ++i)
        values.push_back(count == 1 ? parts[0] : parts[0] + (parts[1] - parts[0]) * i / (count - 1));
    return values;
}

Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Json number(double value) { return std::isfinite(value) ? Json(value) : Json(nullptr); }

void write_manifest(OutputSet& outputs, const std::string& command, const SimulationConfig& config,
                    const std::vector<std::string>& arguments, std::chrono::steady_clock::time_point start) {
    Json manifest;
    manifest["command"] = command;
    manifest["tool_version"] = LEVITATE_VERSION;
    manifest["arguments"] = arguments;
    manifest["config"] = serialize_config(config);
    Json files = Json::array();
    for (const auto& file : outputs.files())
        files.push_back(file.filename().string());
    manifest["outputs"] = files;
    manifest["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    outputs.write("manifest.json", manifest.dump(2) + "\n");
}

// trap-scan

struct ScanArgs {
    std::string region;
    int grid_points = 81;
};

Region parse_region(const std::string& text, const Levitator& lev) {
    if (text.empty())
        return default_scan_region(lev);
    const auto v = split_numbers(text, ',');
    if (v.size() != 6)
        throw UsageError("--region expects xmin,xmax,ymin,ymax,zmin,zmax in metres");
    Region region;
    region.lower = Vec3(v[0], v[2], v[4]);
    region.upper = Vec3(v[1], v[3], v[5]);
    return region;
}

std::string grid_csv(const std::vector<GridSample>& samples, double reference) {
    CsvTable table({"x", "y", "z", "potential"});
    for (const auto& s : samples)
        table.add_numbers({s.position.x(), s.position.y(), s.position.z(), s.value - reference});
    return table.str();
}

void trap_scan(const Common& common, const ScanArgs& args, const std::vector<std::string>& argv) {
    const auto start = std::chrono::steady_clock::now();
    const SimulationConfig config = read_config(common);
    const Levitator lev = Levitator::from_config(config);
    const Region region = parse_region(args.region, lev);
    if (args.grid_points < 2)
        throw UsageError("--grid-points must be at least 2");

    ScanOptions options;
    options.threads = common.threads;
    const LatticeScan scan = scan_lattice(region, lev, options);
    if (region.empty())
        std::cerr << "warning: scan region is empty\n";
    else if (scan.sites.empty())
        std::cerr << "warning: no stable trap sites in the scan region\n";

    OutputSet outputs(common.out_dir);
    CsvTable sites({"index", "x", "y", "z", "detuning_1", "detuning_2", "detuning_3", "omega_1", "omega_2",
                    "omega_3", "extent_1", "extent_2", "extent_3", "stable"});
    for (std::size_t i = 0; i < scan.sites.size(); ++i) {
        const auto& s = scan.sites[i];
        sites.add_row({std::to_string(i), format_number(s.position.x()), format_number(s.position.y()),
                       format_number(s.position.z()), format_number(s.detunings[0]), format_number(s.detunings[1]),
                       format_number(s.detunings[2]), format_number(s.frequencies[0]),
                       format_number(s.frequencies[1]), format_number(s.frequencies[2]),
                       format_number(s.extents[0]), format_number(s.extents[1]), format_number(s.extents[2]),
                       s.stable ? "1" : "0"});
    }
    outputs.write("sites.csv", sites.str());

    std::vector<GridSample> xy;
    std::vector<GridSample> yz;
    double reference = 0.0;
    try {
        const TrapSite centre = central_trap(lev);
        const Mat3 frame = apparatus_frame(lev);
        reference = potential(centre.position, lev);
        xy = potential_grid(centre.position, frame.col(0), frame.col(1), 20e-6, 20e-6, args.grid_points, lev);
        yz = potential_grid(centre.position, frame.col(1), frame.col(2), 60e-9, 3e-9, args.grid_points, lev);
    } catch (const NumericalError& error) {
        std::cerr << "warning: no central trap for potential maps: " << error.what() << "\n";
    }
    outputs.write("potential_xy.csv", grid_csv(xy, reference));
    outputs.write("potential_yz.csv", grid_csv(yz, reference));

    const auto& sp = scan.spacing;
    Json stats;
    stats["region_lower"] = vec_json(region.lower);
    stats["region_upper"] = vec_json(region.upper);
    stats["seeds"] = scan.seeds;
    stats["candidates"] = scan.candidates;
    stats["sites"] = sp.sites;
    stats["mean_nearest"] = number(sp.mean_nearest);
    stats["min_nearest"] = number(sp.min_nearest);
    stats["max_nearest"] = number(sp.max_nearest);
    stats["central_index"] = sp.central_index;
    stats["central_neighbours"] = sp.central_neighbours;
    stats["max_angle_error"] = number(sp.max_angle_error);
    stats["triangular"] = sp.triangular;
    outputs.write("spacing.json", stats.dump(2) + "\n");

    write_manifest(outputs, "trap-scan", config, argv, start);
    outputs.commit();
}

// modes

struct ModesArgs {
    std::string finesse = "1000,3000,5000,10000";
    std::string detunings = "0.05:0.95:19";
    double max_power = 1e3;
};

void modes(const Common& common, const ModesArgs& args, const std::vector<std::string>& argv) {
    const auto start = std::chrono::steady_clock::now();
    const SimulationConfig config = read_config(common);
    const Levitator lev = Levitator::from_config(config);
    const auto finesses = parse_grid(args.finesse);
    const auto detunings = parse_grid(args.detunings);
    for (const double f : finesses)
        if (!(f > 1.0))
            throw UsageError("finesse values must exceed 1");
    for (const double d : detunings)
        if (!(d > 0.0 && d < 1.0))
            throw UsageError("detunings must lie in (0, 1)");
    if (!(args.max_power > 1e-3))
        throw UsageError("--max-power must exceed the 1 mW lower bracket");

    SweepOptions options;
    options.support.max_power = args.max_power;
    options.threads = common.threads;
    const auto rows = frequency_vs_detuning(finesses, detunings, lev, options);

    OutputSet outputs(common.out_dir);
    CsvTable table({"finesse", "detuning_over_kappa", "omega_m_vertical", "omega_m_h1", "omega_m_h2",
                    "input_power_total", "feasible"});
    for (const auto& row : rows)
        table.add_row({format_number(row.finesse), format_number(row.detuning), format_number(row.omega_vertical),
                       format_number(row.omega_h1), format_number(row.omega_h2),
                       format_number(row.input_power_total), row.feasible ? "1" : "0"});
    outputs.write("modes.csv", table.str());
    write_manifest(outputs, "modes", config, argv, start);
    outputs.commit();
}

// budget

struct BudgetArgs {
    std::string finesse = "500,1000,2000,3000,5000,10000,20000,50000";
    double power_ratio = 0.1;
    double detected_power = 0.1;
    double integration_time = 100.0;
};

Json cooling_json(const CoolingSummary& s) {
    Json out;
    out["coupling"] = number(s.coupling);
    out["kappa"] = number(s.kappa);
    out["omega_m"] = number(s.omega_m);
    out["s_plus"] = number(s.s_plus);
    out["s_minus"] = number(s.s_minus);
    out["cooling_rate"] = number(s.cooling_rate);
    out["heating_dominated"] = s.heating_dominated;
    out["min_phonons"] = number(s.min_phonons);
    out["combined_phonons"] = number(s.combined_phonons);
    Json beams = Json::array();
    for (const auto& b : s.beams)
        beams.push_back({{"photons", number(b.photons)}, {"detuning", number(b.detuning)}});
    out["beams"] = beams;
    return out;
}

void budget(const Common& common, const BudgetArgs& args, const std::vector<std::string>& argv) {
    const auto start = std::chrono::steady_clock::now();
    const SimulationConfig config = read_config(common);
    const Levitator lev = Levitator::from_config(config);
    const auto finesses = parse_grid(args.finesse);

    const TrapSite site = central_trap(lev);
    const double omega = vertical_frequency(site, lev);
    const GasBudget gas = gas_budget(config.environment, config.mirror, omega);
    const LaserNoiseBudget noise = intensity_heating(omega, config.environment.intensity_noise);
    const ThermalBudget thermal =
        blackbody_balance(config.environment, config.mirror, laser_absorbed_power(site.position, lev, config.mirror));
    const CoolingSummary cooling = cooling_summary(site, lev, gas);
    const auto sweep = min_phonon_vs_finesse(finesses, lev, args.power_ratio, common.threads);

    Json report;
    report["trap"] = {{"position", vec_json(site.position)},
                      {"omega_vertical", omega},
                      {"detunings", site.detunings}};
    report["gas"] = {{"damping_rate", number(gas.damping_rate)},
                     {"collision_rate", number(gas.collision_rate)},
                     {"heating_power", number(gas.heating_power)},
                     {"heating_power_closed_form", number(gas.heating_power_closed_form)},
                     {"thermal_phonons", number(gas.thermal_phonons)},
                     {"quality_factor", number(gas.quality_factor)},
                     {"knudsen_number", number(gas.knudsen)},
                     {"free_molecular", gas.free_molecular}};
    report["laser_noise"] = {{"s_eps_2omega", number(noise.s_eps_2omega)},
                             {"heating_rate", number(noise.heating_rate)},
                             {"efold_time", number(noise.efold_time)},
                             {"parametric_rate_up_n0", number(noise.ground_rates.up)},
                             {"rms_requirement_10s_300kHz", number(rms_requirement(omega, 10.0, 3e5))}};
    report["thermal"] = {{"laser_absorbed_power", number(thermal.laser_absorbed_power)},
                         {"absorption_power", number(thermal.absorption_power)},
                         {"emission_power", number(thermal.emission_power)},
                         {"internal_temperature", number(thermal.internal_temperature)},
                         {"delta_t", number(thermal.delta_t)}};
    report["cooling"] = cooling_json(cooling);
    report["gravimetry"] = {
        {"detected_power", args.detected_power},
        {"integration_time", args.integration_time},
        {"wavelength", config.drive.wavelength},
        {"photons", number(detected_photons(args.detected_power, args.integration_time, config.drive.wavelength))},
        {"relative_precision",
         number(gravimetric_precision(args.detected_power, args.integration_time, config.drive.wavelength))}};

    CsvTable table({"finesse", "kappa", "omega_m", "min_phonons", "feasible"});
    Json rows = Json::array();
    for (const auto& row : sweep) {
        table.add_row({format_number(row.finesse), format_number(row.kappa), format_number(row.omega_m),
                       format_number(row.min_phonons), row.feasible ? "1" : "0"});
        rows.push_back({{"finesse", row.finesse}, {"min_phonons", number(row.min_phonons)}, {"feasible", row.feasible}});
    }
    report["phonon_sweep"] = {{"trap_to_cool_power", args.power_ratio}, {"rows", rows}};

    OutputSet outputs(common.out_dir);
    outputs.write("budget.json", report.dump(2) + "\n");
    outputs.write("phonons.csv", table.str());
    write_manifest(outputs, "budget", config, argv, start);
    outputs.commit();
}

// dynamics

struct DynamicsArgs {
    std::string model = "quasistatic";
    double displace_nm = 0.1;
    std::optional<double> duration;
    double periods = 100.0;
    int samples_per_period = 50;
};

void dynamics(const Common& common, const DynamicsArgs& args, const std::vector<std::string>& argv) {
    const auto start = std::chrono::steady_clock::now();
    const SimulationConfig config = read_config(common);
    const Levitator lev = Levitator::from_config(config);
    if (args.model != "quasistatic" && args.model != "dynamic")
        throw UsageError("--model must be quasistatic or dynamic");
    if (args.duration && *args.duration < 0.0)
        throw UsageError("--duration must not be negative");
    if (args.samples_per_period < 4)
        throw UsageError("--samples-per-period must be at least 4");

    const TrapSite site = central_trap(lev);
    const Vec3 up = -lev.gravity.normalized();
    MechState initial;
    initial.position = site.position + args.displace_nm * 1e-9 * up;

    std::optional<DynamicModel> model;
    double omega = 0.0;
    if (args.model == "dynamic") {
        const double trap = lev.drive.total_trap_power();
        const double cool = config.drive.cool_power[0] + config.drive.cool_power[1] + config.drive.cool_power[2];
        model = cool > 0.0 ? cooled_model(lev, site.position, cool / trap)
                           : DynamicModel::from_quasistatic(lev, site.position);
        omega = model->vertical_frequency(site.position);
        if (!(omega > 0.0))
            throw UnstableSiteError("dynamic model has no vertical restoring force", 0.0);
    } else {
        omega = vertical_frequency(site, lev);
    }
    const double period = 2.0 * constants::pi / omega;
    const double duration = args.duration ? *args.duration : args.periods * period;
    const double interval = period / args.samples_per_period;

    Trajectory trajectory;
    if (model) {
        DynamicOptions options;
        options.duration = duration;
        options.output_interval = interval;
        trajectory = simulate_dynamic(initial, model->steady_fields(initial.position), *model, options);
    } else {
        QuasistaticOptions options;
        options.duration = duration;
        options.output_interval = interval;
        trajectory = simulate_quasistatic(initial, lev, options);
    }

    CsvTable table({"t", "x", "y", "z", "vx", "vy", "vz", "n_1", "n_2", "n_3"});
    double excursion = 0.0;
    for (const auto& s : trajectory.samples) {
        table.add_numbers({s.time, s.position.x(), s.position.y(), s.position.z(), s.velocity.x(), s.velocity.y(),
                           s.velocity.z(), s.photons[0], s.photons[1], s.photons[2]});
        excursion = std::max(excursion, (s.position - site.position).norm());
    }

    Json summary;
    summary["model"] = args.model;
    summary["trap_position"] = vec_json(site.position);
    summary["omega_vertical"] = omega;
    summary["duration"] = duration;
    summary["samples"] = trajectory.samples.size();
    summary["max_excursion"] = excursion;
    summary["steps"] = trajectory.stats.steps;
    summary["rejected_steps"] = trajectory.stats.rejected;
    const double level = up.dot(site.position);
    summary["crossing_frequency"] = number(crossing_frequency(trajectory, up, level));
    try {
        const EnvelopeFit fit = fit_envelope(trajectory, up, level);
        summary["envelope"] = {{"rate", fit.rate},
                               {"monotonic", fit.monotonic},
                               {"peaks", fit.peaks},
                               {"growing", fit.rate > 0.0 && fit.monotonic},
                               {"decaying", fit.rate < 0.0 && fit.monotonic}};
    } catch (const NumericalError&) {
        summary["envelope"] = nullptr;
    }

    OutputSet outputs(common.out_dir);
    outputs.write("trajectory.csv", table.str());
    outputs.write("summary.json", summary.dump(2) + "\n");
    write_manifest(outputs, "dynamics", config, argv, start);
    outputs.commit();
}

void add_common(CLI::App& command, Common& common) {
    command.add_option("config", common.config_path, "Configuration file (defaults when omitted)");
    command.add_option("--out", common.out_dir, "Output directory")->required();
    command.add_option("--threads", common.threads, "Worker threads (overrides LEVITATE_THREADS)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mirror levitated on three cavity optical springs: trap lattice, modes, dynamics and budgets.\n"
                 "Thread count: --threads, else LEVITATE_THREADS, else hardware concurrency."};
    app.set_version_flag("--version", LEVITATE_VERSION);
    app.require_subcommand(1);

    Common common;
    ScanArgs scan_args;
    ModesArgs modes_args;
    BudgetArgs budget_args;
    DynamicsArgs dynamics_args;
    double duration = 0.0;

    auto* scan = app.add_subcommand("trap-scan", "Locate the trap lattice; write sites, potential maps and spacing");
    add_common(*scan, common);
    scan->add_option("--region", scan_args.region, "xmin,xmax,ymin,ymax,zmin,zmax in metres");
    scan->add_option("--grid-points", scan_args.grid_points, "Points per side of each potential map");

    auto* mode = app.add_subcommand("modes", "Mode frequencies versus detuning for several finesses");
    add_common(*mode, common);
    mode->add_option("--finesse", modes_args.finesse, "Comma list or start:stop:count");
    mode->add_option("--detuning-grid", modes_args.detunings, "Detunings over kappa, comma list or start:stop:count");
    mode->add_option("--max-power", modes_args.max_power, "Upper bracket of the support-power solve (W)");

    auto* bud = app.add_subcommand("budget", "Heating, cooling and sensitivity report");
    add_common(*bud, common);
    bud->add_option("--finesse", budget_args.finesse, "Finesse grid of the phonon sweep");
    bud->add_option("--power-ratio", budget_args.power_ratio, "Trap-to-cooling input power ratio of the sweep");
    bud->add_option("--detected-power", budget_args.detected_power, "Gravimetry detected power (W)");
    bud->add_option("--integration-time", budget_args.integration_time, "Gravimetry integration time (s)");

    auto* dyn = app.add_subcommand("dynamics", "Integrate the mirror motion from a displaced start");
    add_common(*dyn, common);
    dyn->add_option("--model", dynamics_args.model, "quasistatic or dynamic");
    dyn->add_option("--displace", dynamics_args.displace_nm, "Initial vertical displacement (nm)");
    auto* duration_option = dyn->add_option("--duration", duration, "Duration (s); default is --periods periods");
    dyn->add_option("--periods", dynamics_args.periods, "Duration in vertical periods when --duration is absent");
    dyn->add_option("--samples-per-period", dynamics_args.samples_per_period, "Output samples per period");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& error) {
        const int code = app.exit(error);
        return code == 0 ? 0 : kExitConfig;
    }
    const std::vector<std::string> arguments(argv + 1, argv + argc);

    try {
        if (scan->parsed()) {
            trap_scan(common, scan_args, arguments);
        } else if (mode->parsed()) {
            modes(common, modes_args, arguments);
        } else if (bud->parsed()) {
            budget(common, budget_args, arguments);
        } else if (dyn->parsed()) {
            if (duration_option->count() > 0)
                dynamics_args.duration = duration;
            dynamics(common, dynamics_args, arguments);
        }
    } catch (const ConfigError& error) {
        std::cerr << "config error: " << error.what() << "\n";
        return kExitConfig;
    } catch (const UsageError& error) {
        std::cerr << "error: " << error.what() << "\n";
        return kExitConfig;
    } catch (const IoError& error) {
        std::cerr << "I/O error: " << error.what() << "\n";
        return kExitIo;
    } catch (const NumericalError& error) {
        std::cerr << "numerical failure: " << error.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& error) {
        std::cerr << "numerical failure: " << error.what() << "\n";
        return kExitNumerical;
    }
    return 0;
}
