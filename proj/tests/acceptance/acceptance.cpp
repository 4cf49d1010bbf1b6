// Acceptance checks. Each check prints one PASS/FAIL line. Run with no
// arguments for all checks, or name check ids ("1", "8-upper", ...).

#include "levitation/budgets.hpp"
#include "levitation/config.hpp"
#include "levitation/dynamics.hpp"
#include "levitation/modes.hpp"
#include "levitation/optics.hpp"
#include "levitation/potential.hpp"
#include "levitation/traps.hpp"

#include "../support/oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

using namespace levitation;
using levitation::testing::PoseSampler;
using levitation::testing::fd_gradient;
using levitation::testing::relative_error;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Check {
    std::string id;
    std::string title;
    std::function<Outcome()> run;
};

std::string fmt(const char* format, auto... args) {
    char buffer[512];
    std::snprintf(buffer, sizeof buffer, format, args...);
    return buffer;
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Levitator default_levitator() { return Levitator::from_config(default_config()); }

int vertical_axis_index(const Mat3& axes) {
    int best = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(axes(2, i)) > std::abs(axes(2, best)))
            best = i;
    return best;
}

Outcome support_power() {
    const Levitator lev = default_levitator();
    const Stopwatch clock;
    const double power = solve_support_power(0.5, lev);
    const double elapsed = clock.seconds();
    return {power >= 0.5 && power <= 5.0 && elapsed < 1.0,
            fmt("P_total = %.4g W (want [0.5, 5]), %.3f s (want < 1 s)", power, elapsed)};
}

Outcome trap_lattice() {
    const Levitator lev = default_levitator();
    const Region region = default_scan_region(lev);
    const Stopwatch clock;
    const LatticeScan scan = scan_lattice(region, lev);
    const double elapsed = clock.seconds();

    // 120 degree rotation about the tripod axis; images falling within 1 um of
    // the region boundary may legitimately have been cut off by the scan.
    const double margin = 1e-6;
    std::size_t images = 0;
    double worst = 0.0;
    for (const TrapSite& site : scan.sites) {
        for (const double angle : {2.0 * constants::pi / 3.0, -2.0 * constants::pi / 3.0}) {
            const Vec3 image = levitation::testing::rotate_about_z(site.position, angle);
            if (image.x() < region.lower.x() + margin || image.x() > region.upper.x() - margin ||
                image.y() < region.lower.y() + margin || image.y() > region.upper.y() - margin ||
                image.z() < region.lower.z() || image.z() > region.upper.z())
                continue;
            double nearest = std::numeric_limits<double>::infinity();
            for (const TrapSite& other : scan.sites)
                nearest = std::min(nearest, (other.position - image).norm());
            worst = std::max(worst, nearest);
            ++images;
        }
    }
    const double spacing = scan.spacing.mean_nearest;
    const bool pass = scan.spacing.triangular && spacing >= 10e-6 && spacing <= 20e-6 && images > 0 &&
                      worst <= 1e-9 && elapsed < 60.0;
    return {pass, fmt("%zu sites, triangular=%d, mean spacing %.4g um (want [10, 20]), rotation mismatch %.3g nm over "
                      "%zu images (want <= 1), %.1f s (want < 60 s)",
                      scan.sites.size(), scan.spacing.triangular ? 1 : 0, spacing * 1e6, worst * 1e9, images,
                      elapsed)};
}

Outcome trap_extents_check() {
    const Levitator lev = default_levitator();
    const Stopwatch clock;
    const TrapSite site = central_trap(lev);
    const Vec3 extents = trap_extents(site, lev);
    const double elapsed = clock.seconds();
    const Mat3 axes = principal_axes(site.stiffness, lev);
    const int v = vertical_axis_index(axes);
    const int h1 = (v + 1) % 3, h2 = (v + 2) % 3;
    const double vertical = extents[v];
    const double lo = std::min(extents[h1], extents[h2]);
    const double hi = std::max(extents[h1], extents[h2]);
    const bool pass = vertical >= 0.3e-9 && vertical <= 3e-9 && lo >= 10e-9 && hi <= 60e-9 && elapsed < 10.0;
    return {pass, fmt("vertical %.3g nm (want [0.3, 3]), horizontal %.3g / %.3g nm (want [10, 60]), %.2f s "
                      "(want < 10 s)",
                      vertical * 1e9, lo * 1e9, hi * 1e9, elapsed)};
}

Vec3 trap_region_half_widths() { return {30e-6, 30e-6, 20e-9}; }

Outcome gradient_check() {
    const Levitator lev = default_levitator();
    const TrapSite site = central_trap(lev);
    PoseSampler sampler(site.position, trap_region_half_widths(), 4);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const Vec3 r = sampler.next();
        const Vec3 analytic = gradient(r, lev);
        const Vec3 numeric = fd_gradient(r, lev);
        worst = std::max(worst, (analytic - numeric).norm() / analytic.norm());
    }
    return {worst < 1e-6, fmt("max relative deviation %.3g over 100 poses (want < 1e-6)", worst)};
}

Outcome force_potential_check() {
    const Levitator base = default_levitator();
    const TrapSite site = central_trap(base);
    std::ostringstream detail;
    bool pass = true;
    for (const double finesse : {100.0, 1000.0, 10000.0}) {
        Levitator lev = base;
        lev.drive.finesse = finesse;
        PoseSampler sampler(site.position, trap_region_half_widths(), 5);
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            MirrorPose pose;
            pose.r = sampler.next();
            const ForceResult force = radiation_force(pose, lev, true);
            // Scale: the magnitudes of the summed terms, so cancellation between
            // optics and weight does not inflate the relative error.
            double scale = lev.weight();
            for (const CavityState& cavity : force.cavities)
                scale += cavity.force.norm();
            worst = std::max(worst, (-gradient(pose.r, lev) - force.total).norm() / scale);
        }
        const double bound = 2.0 / (finesse * finesse) + 1e-9;
        pass = pass && worst <= bound;
        detail << fmt("F=%g: %.3g (bound %.3g) ", finesse, worst, bound);
    }
    return {pass, detail.str()};
}

Outcome mode_frequency_oracle() {
    const Levitator lev = default_levitator();
    const TrapSite site = central_trap(lev);
    const double oracle = std::sqrt(site.stiffness(2, 2) / lev.mass);
    const double period = 2.0 * constants::pi / oracle;
    MechState start;
    start.position = site.position + Vec3(0.0, 0.0, 0.1e-9);
    QuasistaticOptions options;
    options.duration = 50.0 * period;
    options.output_interval = period / 50.0;
    const Trajectory trajectory = simulate_quasistatic(start, lev, options);
    const double measured = crossing_frequency(trajectory, Vec3::UnitZ(), site.position.z());
    const double error = relative_error(measured, oracle);
    return {error < 0.01, fmt("crossing %.6g Hz vs sqrt(K_zz/m)/2pi %.6g Hz, relative %.3g (want < 1%%)",
                              measured / (2.0 * constants::pi), oracle / (2.0 * constants::pi), error)};
}

Outcome energy_conservation() {
    const Levitator lev = default_levitator();
    const TrapSite site = central_trap(lev);
    const ModeSet modes = mode_frequencies(site, lev.mass, lev);
    const double omega = modes.frequencies[vertical_mode(modes, lev)];
    const double period = 2.0 * constants::pi / omega;
    MechState start;
    start.position = site.position + Vec3(0.0, 0.0, 0.1e-9);
    QuasistaticOptions options;
    options.duration = 1000.0 * period;
    options.output_interval = period / 10.0;
    const Trajectory trajectory = simulate_quasistatic(start, lev, options);
    const double e0 = mechanical_energy(start.position, start.velocity, lev, site.position);
    double drift = 0.0;
    for (const TrajectorySample& s : trajectory.samples)
        drift = std::max(drift, std::abs(mechanical_energy(s.position, s.velocity, lev, site.position) - e0));
    drift /= std::abs(e0);
    return {drift < 1e-6, fmt("max relative energy drift %.3g over 1000 periods (want < 1e-6)", drift)};
}

struct DetuningSweep {
    std::vector<double> finesses{1000.0, 3000.0, 5000.0, 10000.0};
    std::vector<double> lower_approach{1e-4, 1e-3, 1e-2};
    std::vector<double> interior;
    std::vector<double> upper_approach{1.0 - 1e-2, 1.0 - 1e-3, 1.0 - 1e-4};
    std::vector<double> grid;
    std::vector<SweepRow> rows;

    DetuningSweep() {
        for (int i = 1; i <= 19; ++i)
            interior.push_back(0.05 * i);
        grid = lower_approach;
        grid.insert(grid.end(), interior.begin(), interior.end());
        grid.insert(grid.end(), upper_approach.begin(), upper_approach.end());
        rows = frequency_vs_detuning(finesses, grid, default_levitator());
    }
    const SweepRow& at(std::size_t f, std::size_t d) const { return rows[f * grid.size() + d]; }
    double peak(std::size_t f) const {
        double best = 0.0;
        for (std::size_t d = 0; d < grid.size(); ++d)
            best = std::max(best, at(f, d).omega_vertical);
        return best;
    }
};

const DetuningSweep& detuning_sweep() {
    static const DetuningSweep sweep;
    return sweep;
}

// A limit of zero at an endpoint: along probes one decade apart, approaching
// the endpoint, omega falls by at least `decade_ratio` per decade and the
// closest probe sits below `fraction` of the peak.
bool tends_to_zero(const std::vector<double>& approach, double peak, double decade_ratio = 0.8,
                   double fraction = 0.05) {
    for (std::size_t i = 1; i < approach.size(); ++i)
        if (!(approach[i] <= decade_ratio * approach[i - 1]))
            return false;
    return approach.back() < fraction * peak;
}

Outcome detuning_shape() {
    const DetuningSweep& s = detuning_sweep();
    bool feasible = true, unimodal = true, ordered = true, lower = true;
    std::ostringstream detail;
    for (std::size_t f = 0; f < s.finesses.size(); ++f) {
        std::size_t argmax = 0;
        for (std::size_t d = 0; d < s.grid.size(); ++d) {
            feasible = feasible && s.at(f, d).feasible;
            if (s.at(f, d).omega_vertical > s.at(f, argmax).omega_vertical)
                argmax = d;
        }
        for (std::size_t d = 1; d < s.grid.size(); ++d) {
            const double step = s.at(f, d).omega_vertical - s.at(f, d - 1).omega_vertical;
            if ((d <= argmax && step <= 0.0) || (d > argmax && step >= 0.0))
                unimodal = false;
        }
        unimodal = unimodal && argmax > 0 && argmax + 1 < s.grid.size();
        std::vector<double> approach;
        for (std::size_t d = s.lower_approach.size(); d-- > 0;)
            approach.push_back(s.at(f, d).omega_vertical);
        lower = lower && tends_to_zero(approach, s.peak(f));
        detail << fmt("F=%g peak %.4g kHz at %.3g, w(%g)/peak %.3g; ", s.finesses[f],
                      s.peak(f) / (2e3 * constants::pi), s.grid[argmax], s.grid.front(), approach.back() / s.peak(f));
    }
    for (std::size_t d = 0; d < s.grid.size(); ++d)
        for (std::size_t f = 1; f < s.finesses.size(); ++f)
            ordered = ordered && s.at(f, d).omega_vertical > s.at(f - 1, d).omega_vertical;
    detail << fmt("feasible=%d single-max=%d ordered=%d lower-endpoint=%d", feasible, unimodal, ordered, lower);
    return {feasible && unimodal && ordered && lower, detail.str()};
}

Outcome detuning_upper_endpoint() {
    const DetuningSweep& s = detuning_sweep();
    bool pass = true;
    std::ostringstream detail;
    for (std::size_t f = 0; f < s.finesses.size(); ++f) {
        std::vector<double> approach;
        for (std::size_t d = s.grid.size() - s.upper_approach.size(); d < s.grid.size(); ++d)
            approach.push_back(s.at(f, d).omega_vertical);
        pass = pass && tends_to_zero(approach, s.peak(f));
        detail << fmt("F=%g w/peak at 1-1e-2, 1-1e-3, 1-1e-4: %.3g %.3g %.3g; ", s.finesses[f],
                      approach[0] / s.peak(f), approach[1] / s.peak(f), approach[2] / s.peak(f));
    }
    detail << "want a fall of >= 20% per decade, ending below 5% of the peak";
    return {pass, detail.str()};
}

struct EnvelopeRun {
    double finesse;
    double power_ratio;  // 0: blue trap beam only
    double amplitude;
    double periods;
    double skip;
    std::size_t min_peaks;
};

EnvelopeFit envelope_of(const EnvelopeRun& run) {
    const Levitator lev = supported_levitator(default_levitator(), run.finesse, 0.5);
    const TrapSite site = central_trap(lev);
    const DynamicModel model = run.power_ratio > 0.0 ? cooled_model(lev, site.position, run.power_ratio)
                                                     : DynamicModel::from_quasistatic(lev, site.position);
    const double period = 2.0 * constants::pi / model.vertical_frequency(site.position);
    MechState start;
    start.position = site.position + Vec3(0.0, 0.0, run.amplitude);
    DynamicOptions options;
    options.duration = run.periods * period;
    options.output_interval = period / 100.0;
    options.length_scale = run.amplitude;
    const Trajectory trajectory = simulate_dynamic(start, model.steady_fields(start.position), model, options);
    return fit_envelope(trajectory, Vec3::UnitZ(), site.position.z(), run.skip, run.min_peaks);
}

Outcome damping_signs() {
    // At F = 3000 the anti-damping and cooling rates are fast enough that a
    // 20-period window leaves the linear range; a 12-period window is used.
    const std::vector<std::pair<EnvelopeRun, bool>> runs{
        {{1000.0, 0.0, 1e-15, 30.0, 5.0, 20}, true},
        {{1000.0, 10.0, 1e-13, 30.0, 5.0, 20}, false},
        {{3000.0, 0.0, 1e-17, 12.0, 2.0, 8}, true},
        {{3000.0, 10.0, 1e-15, 12.0, 2.0, 8}, false},
    };
    bool pass = true;
    std::ostringstream detail;
    for (const auto& [run, growing] : runs) {
        const EnvelopeFit fit = envelope_of(run);
        const bool ok = growing ? fit.rate > 0.0 : fit.rate < 0.0;
        pass = pass && ok;
        detail << fmt("F=%g %s rate %.3g/s (%zu peaks); ", run.finesse, growing ? "blue" : "red x10", fit.rate,
                      fit.peaks);
    }
    return {pass, detail.str()};
}

Outcome sideband_limit() {
    const double omega = 2.0 * constants::pi * 5e5;
    const double kappa = 0.05 * omega;
    const CoolingSummary summary = sideband_cooling({Beam{1e6, -omega}}, kappa, omega, 1.0, 0.0, 0.0);
    const double oracle = std::pow(kappa / (4.0 * omega), 2);
    const double error = relative_error(summary.min_phonons, oracle);
    return {error < 0.1, fmt("<n>_min %.6g vs (kappa/4w)^2 %.6g, relative %.3g (want < 10%%)", summary.min_phonons,
                             oracle, error)};
}

Outcome phonon_sweep() {
    const std::vector<double> finesses{1000, 1500, 2000, 2500, 3000, 4000, 5000, 6000, 8000, 10000};
    const Stopwatch clock;
    const auto rows = min_phonon_vs_finesse(finesses, default_levitator(), 0.1);
    const double elapsed = clock.seconds();
    bool feasible = true, monotone = true;
    std::ostringstream detail;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        feasible = feasible && rows[i].feasible;
        if (i > 0)
            monotone = monotone && rows[i].min_phonons < rows[i - 1].min_phonons;
        detail << fmt("%g:%.3g ", rows[i].finesse, rows[i].min_phonons);
    }
    const bool crossing = rows.front().min_phonons > 1.0 && rows.back().min_phonons < 1.0;
    detail << fmt("| monotone=%d unity-crossing-in-range=%d, %.1f s (want < 60 s)", monotone, crossing, elapsed);
    return {feasible && monotone && crossing && elapsed < 60.0, detail.str()};
}

Outcome gas_quadrature() {
    const SimulationConfig config = default_config();
    double worst = 0.0;
    for (const double temperature : {77.0, 300.0, 1000.0}) {
        for (const double gas_mass : {6.646e-27, 4.65e-26, 6.63e-26}) {
            Environment env = config.environment;
            env.temperature = temperature;
            env.gas_mass = gas_mass;
            const GasHeating heating = gas_heating(env, config.mirror, 2.0 * constants::pi * 5e5);
            worst = std::max(worst, relative_error(heating.power, heating.closed_form_power));
        }
    }
    return {worst <= 1e-9, fmt("max relative deviation %.3g over 9 (T, m_g) pairs (want <= 1e-9)", worst)};
}

Outcome gas_quality_factor() {
    const SimulationConfig config = default_config();
    const GasBudget budget = gas_budget(config.environment, config.mirror, 5e5, FrequencyConvention::cyclic);
    const bool pass = budget.quality_factor >= 5e8 && budget.quality_factor <= 5e10;
    return {pass, fmt("Q = %.3g at 500 kHz (want [5e8, 5e10]), gamma_m = %.3g 1/s", budget.quality_factor,
                      budget.damping_rate)};
}

Outcome gas_thermal_occupation() {
    const SimulationConfig config = default_config();
    const GasBudget cyclic = gas_budget(config.environment, config.mirror, 5e5, FrequencyConvention::cyclic);
    const GasBudget angular = gas_budget(config.environment, config.mirror, 5e5, FrequencyConvention::angular);
    const bool pass = cyclic.thermal_phonons >= 5.0 && cyclic.thermal_phonons <= 500.0;
    return {pass, fmt("<n_th> = %.3g at 500 kHz cyclic (%.3g reading 5e5 as rad/s); want [5, 500]",
                      cyclic.thermal_phonons, angular.thermal_phonons)};
}

Outcome laser_noise_chain() {
    const double rms = 7e-4;
    const double bandwidth = 3e5;
    // The 300 kHz band sets the level; the spectrum is taken as flat at 2 omega_m.
    const NoiseSpectrum flat{rms * rms / bandwidth, 0.0};
    const LaserNoiseBudget budget = intensity_heating(5e5, flat, FrequencyConvention::cyclic);
    const double error = relative_error(budget.efold_time, 10.0);
    return {error <= 0.05, fmt("tau_e = %.4g s (want 10 s within 5%%), S_eps = %.4g 1/Hz", budget.efold_time,
                               flat.level)};
}

Outcome blackbody_check() {
    double worst = 0.0;
    const MirrorSpec mirror;
    for (const double temperature : {77.0, 300.0, 1000.0})
        worst = std::max(worst, relative_error(blackbody_power_quadrature(temperature, mirror.cross_section(),
                                                                          mirror.emissivity),
                                               blackbody_power(temperature, mirror.cross_section(), mirror.emissivity)));
    const Environment env;
    const ThermalBudget balance = blackbody_balance(env, mirror, 0.0);
    const bool fixed_point = balance.internal_temperature == env.temperature && balance.delta_t == 0.0;
    return {worst <= 1e-6 && fixed_point,
            fmt("quadrature vs closed form %.3g (want <= 1e-6); zero absorption T_int = %.17g K, dT = %g", worst,
                balance.internal_temperature, balance.delta_t)};
}

Outcome gravimetry_check() {
    const double wavelength = 1064e-9;
    const double precision = gravimetric_precision(0.1, 100.0, wavelength);
    const double photons = detected_photons(0.1, 100.0, wavelength);
    const bool exact = precision == 1.0 / std::sqrt(photons);
    const bool bracket = precision >= 1e-11 && precision <= 2e-10;
    return {exact && bracket, fmt("dg/g = %.4g from %.4g photons (want [1e-11, 2e-10]), 1/sqrt(n) exact=%d",
                                  precision, photons, exact)};
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

Outcome cli_determinism() {
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / ("levitate-acceptance-" + std::to_string(::getpid()));
    fs::remove_all(root);
    const std::vector<std::string> commands{
        "trap-scan --region -2e-5,2e-5,-2e-5,2e-5,4e-8,8e-8",
        "modes --finesse 1000,3000 --detuning-grid 0.1:0.9:5",
        "budget --finesse 1000,3000,10000",
        "dynamics --model dynamic --periods 20",
    };
    bool pass = true;
    std::size_t compared = 0;
    std::ostringstream detail;
    for (std::size_t i = 0; i < commands.size(); ++i) {
        std::vector<fs::path> dirs;
        for (const char* threads : {"1", "3"}) {
            const fs::path dir = root / (std::to_string(i) + "-" + threads);
            const std::string line = std::string(LEVITATE_CLI) + " " + commands[i] + " --threads " + threads +
                                     " --out " + dir.string() + " > /dev/null 2>&1";
            if (std::system(line.c_str()) != 0) {
                pass = false;
                detail << "command failed: " << commands[i] << "; ";
            }
            dirs.push_back(dir);
        }
        if (!fs::exists(dirs[0]))
            continue;
        for (const auto& entry : fs::directory_iterator(dirs[0])) {
            const std::string name = entry.path().filename().string();
            if (name == "manifest.json")
                continue;
            ++compared;
            if (read_file(entry.path()) != read_file(dirs[1] / name)) {
                pass = false;
                detail << "differs: " << name << "; ";
            }
        }
    }
    fs::remove_all(root);
    detail << fmt("%zu output files compared byte-for-byte across runs with 1 and 3 threads", compared);
    return {pass && compared > 0, detail.str()};
}

const std::vector<Check>& checks() {
    static const std::vector<Check> table{
        {"1", "support power", support_power},
        {"2", "trap lattice", trap_lattice},
        {"3", "trap extents", trap_extents_check},
        {"4", "gradient vs finite differences", gradient_check},
        {"5", "force-potential consistency", force_potential_check},
        {"6", "mode-frequency oracle", mode_frequency_oracle},
        {"7", "energy conservation", energy_conservation},
        {"8", "detuning sweep shape", detuning_shape},
        {"8-upper", "detuning sweep upper endpoint", detuning_upper_endpoint},
        {"9", "damping signs", damping_signs},
        {"10", "sideband limit", sideband_limit},
        {"11", "phonon number vs finesse", phonon_sweep},
        {"12", "gas heating quadrature", gas_quadrature},
        {"12-q", "gas quality factor", gas_quality_factor},
        {"12-nth", "gas thermal occupation", gas_thermal_occupation},
        {"13", "laser noise chain", laser_noise_chain},
        {"14", "blackbody", blackbody_check},
        {"15", "gravimetry", gravimetry_check},
        {"16", "CLI determinism", cli_determinism},
    };
    return table;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> wanted(argv + 1, argv + argc);
    int failures = 0;
    int ran = 0;
    for (const Check& check : checks()) {
        if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), check.id) == wanted.end())
            continue;
        ++ran;
        Outcome outcome;
        try {
            outcome = check.run();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        failures += outcome.pass ? 0 : 1;
        std::cout << (outcome.pass ? "PASS" : "FAIL") << "  criterion " << check.id << "  " << check.title << ": "
                  << outcome.detail << std::endl;
    }
    if (ran == 0) {
        std::cerr << "no matching criterion\n";
        return 2;
    }
    return failures == 0 ? 0 : 1;
}
