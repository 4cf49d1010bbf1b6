#include "levitation/budgets.hpp"

#include "levitation/errors.hpp"
#include "levitation/modes.hpp"
#include "levitation/optics.hpp"
#include "levitation/parallel.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>

namespace levitation {

namespace {

using constants::c;
using constants::hbar;
using constants::kB;
using constants::pi;

double as_angular(double omega, FrequencyConvention convention) {
    return convention == FrequencyConvention::cyclic ? 2.0 * pi * omega : omega;
}

template <class F>
double integrate_to_infinity(F f, double tolerance) {
    double error = 0.0;
    const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, 0.0, std::numeric_limits<double>::infinity(), 20, tolerance, &error);
    if (!std::isfinite(value) || error > 10.0 * tolerance * std::abs(value))
        throw NumericalError("quadrature did not converge");
    return value;
}

}  // namespace

double gas_damping(const Environment& env, const MirrorSpec& mirror) {
    return 2.0 * env.gas_density() * env.gas_speed() * mirror.cross_section() / mirror.mass;
}

double collision_rate(const Environment& env, const MirrorSpec& mirror) {
    return env.pressure * mirror.cross_section() * env.gas_speed() / (kB * env.temperature);
}

double knudsen_number(const Environment& env, const MirrorSpec& mirror) {
    return env.mean_free_path() / mirror.diameter;
}

GasHeating gas_heating(const Environment& env, const MirrorSpec& mirror, double omega_m) {
    if (!(omega_m > 0.0))
        throw UsageError("mechanical frequency must be positive");
    const double vg = env.gas_speed();
    const double area = mirror.cross_section();
    const double kT = kB * env.temperature;
    const double transfer = 2.0 * env.gas_mass * env.gas_mass / mirror.mass;
    // Gamma_g(v) D(v) (2 m_g^2 / m) v^2 with D(v) = 2 exp(-v^2 / v_g^2) / (sqrt(pi) v_g),
    // integrated over u = v / v_g so the quadrature sees an O(1) scale.
    auto integrand = [&](double u) {
        const double v = u * vg;
        const double density = 2.0 / (std::sqrt(pi) * vg) * std::exp(-u * u);
        return env.pressure * area * v / kT * density * transfer * v * v * vg;
    };
    GasHeating result;
    result.closed_form_power = env.pressure * area / kT * transfer * vg * vg * vg / std::sqrt(pi);
    result.power = env.pressure > 0.0 ? integrate_to_infinity(integrand, 1e-12) : 0.0;
    const double gamma = gas_damping(env, mirror);
    result.thermal_phonons = gamma > 0.0 ? result.power / (gamma * hbar * omega_m) : 0.0;
    return result;
}

GasBudget gas_budget(const Environment& env, const MirrorSpec& mirror, double omega_m,
                     FrequencyConvention convention) {
    GasBudget budget;
    const double omega = as_angular(omega_m, convention);
    budget.damping_rate = gas_damping(env, mirror);
    budget.collision_rate = collision_rate(env, mirror);
    const GasHeating heating = gas_heating(env, mirror, omega);
    budget.heating_power = heating.power;
    budget.heating_power_closed_form = heating.closed_form_power;
    budget.thermal_phonons = heating.thermal_phonons;
    budget.quality_factor = budget.damping_rate > 0.0 ? omega_m / budget.damping_rate : kInfinite;
    budget.knudsen = knudsen_number(env, mirror);
    budget.free_molecular = budget.knudsen > 10.0;
    return budget;
}

ParametricRates parametric_rates(long n, double omega_m, double s_eps_2omega) {
    if (n < 0)
        throw UsageError("phonon number must be non-negative");
    const double scale = pi * omega_m * omega_m / 16.0 * s_eps_2omega;
    const auto m = static_cast<double>(n);
    ParametricRates rates;
    rates.up = scale * (m + 2.0) * (m + 1.0);
    rates.down = n < 2 ? 0.0 : scale * m * (m - 1.0);
    return rates;
}

LaserNoiseBudget intensity_heating(double omega_m, const NoiseSpectrum& spectrum, FrequencyConvention convention) {
    if (!(omega_m > 0.0))
        throw UsageError("mechanical frequency must be positive");
    LaserNoiseBudget budget;
    budget.s_eps_2omega = spectrum(2.0 * as_angular(omega_m, convention));
    budget.heating_rate = omega_m * omega_m / 4.0 * budget.s_eps_2omega;
    budget.efold_time = budget.heating_rate > 0.0 ? 1.0 / budget.heating_rate : kInfinite;
    budget.ground_rates = parametric_rates(0, omega_m, budget.s_eps_2omega);
    return budget;
}

double rms_requirement(double omega_m, double efold_time, double bandwidth, FrequencyConvention) {
    if (!(omega_m > 0.0 && efold_time > 0.0 && bandwidth > 0.0))
        throw UsageError("frequency, e-folding time and bandwidth must be positive");
    const double level = 4.0 / (omega_m * omega_m * efold_time);
    return std::sqrt(level * bandwidth);
}

double blackbody_power(double temperature, double area, double emissivity) {
    const double kT = kB * temperature;
    return pi * pi * area * emissivity * kT * kT * kT * kT / (60.0 * c * c * hbar * hbar * hbar);
}

double blackbody_power_quadrature(double temperature, double area, double emissivity) {
    if (!(temperature > 0.0))
        return 0.0;
    const double scale = hbar * c / (kB * temperature);  // per wavenumber
    // Integrate in x = hbar c k / kB T: k^3 n_k dk = x^3 / (e^x - 1) dx / scale^4.
    auto integrand = [](double x) { return x > 0.0 ? x * x * x / std::expm1(x) : 0.0; };
    const double moment = integrate_to_infinity(integrand, 1e-12);
    return area * emissivity * hbar * c * c / (4.0 * pi * pi) * moment / std::pow(scale, 4);
}

ThermalBudget blackbody_balance(const Environment& env, const MirrorSpec& mirror, double laser_absorbed) {
    if (!(laser_absorbed >= 0.0))
        throw UsageError("absorbed laser power must be non-negative");
    const double area = mirror.cross_section();
    ThermalBudget budget;
    budget.laser_absorbed_power = laser_absorbed;
    budget.absorption_power = blackbody_power(env.temperature, area, mirror.emissivity);
    const double load = laser_absorbed + budget.absorption_power;
    auto excess = [&](double t) { return blackbody_power(t, area, mirror.emissivity) - load; };
    double t_int = env.temperature;
    if (laser_absorbed > 0.0) {
        const double lo = env.temperature;
        const double hi = env.temperature + 1e4;
        if (excess(hi) < 0.0)
            throw InfeasibleError("internal temperature exceeds the bracket; absorbed power is nonphysical");
        const auto root = boost::math::tools::bisect(
            excess, lo, hi, [](double a, double b) { return std::abs(b - a) <= 1e-12 * b; });
        t_int = 0.5 * (root.first + root.second);
    }
    budget.internal_temperature = t_int;
    budget.emission_power = blackbody_power(t_int, area, mirror.emissivity);
    budget.delta_t = t_int - env.temperature;
    return budget;
}

double laser_absorbed_power(const Vec3& position, const Levitator& lev, const MirrorSpec& mirror) {
    const auto forces = radiation_force(MirrorPose{position}, lev, false);
    double total = 0.0;
    for (const auto& cavity : forces.cavities)
        total += cavity.circulating_power;
    return mirror.coating_absorption * total;
}

double sideband_spectrum(const Beam& beam, double kappa, double omega) {
    const double offset = omega + beam.detuning;
    return beam.photons * kappa / (0.25 * kappa * kappa + offset * offset);
}

double mode_photons(double circulating_power, double length, double laser_frequency) {
    return circulating_power * length / (hbar * laser_frequency * c);
}

double optomechanical_coupling(double laser_frequency, double mass, double omega_m, double length) {
    return laser_frequency * std::sqrt(hbar / (2.0 * mass * omega_m)) / length;
}

CoolingSummary sideband_cooling(const std::vector<Beam>& beams, double kappa, double omega_m, double coupling,
                                double gas_damping_rate, double thermal_phonons) {
    CoolingSummary summary;
    summary.beams = beams;
    summary.kappa = kappa;
    summary.omega_m = omega_m;
    summary.coupling = coupling;
    for (const auto& beam : beams) {
        summary.s_plus += sideband_spectrum(beam, kappa, omega_m);
        summary.s_minus += sideband_spectrum(beam, kappa, -omega_m);
    }
    summary.cooling_rate = coupling * coupling * (summary.s_plus - summary.s_minus);
    summary.ratio = summary.s_minus > 0.0 ? summary.s_plus / summary.s_minus : kInfinite;
    summary.heating_dominated = !(summary.ratio > 1.0);
    if (summary.heating_dominated) {
        summary.min_phonons = kInfinite;
        summary.combined_phonons = kInfinite;
        return summary;
    }
    summary.min_phonons = 1.0 / (summary.ratio - 1.0);
    const double total = summary.cooling_rate + gas_damping_rate;
    summary.combined_phonons = gas_damping_rate == 0.0
                                   ? summary.min_phonons
                                   : (summary.cooling_rate * summary.min_phonons + gas_damping_rate * thermal_phonons) / total;
    return summary;
}

double vertical_frequency(const TrapSite& site, const Levitator& lev) {
    const ModeSet modes = mode_frequencies(site, lev.mass, lev);
    return modes.frequencies[vertical_mode(modes, lev)];
}

CoolingSummary cooling_summary(const TrapSite& site, const Levitator& lev, const GasBudget& gas) {
    if (!site.stable)
        throw UnstableSiteError("cooling needs a stable site", 0.0);
    const auto& drive = lev.drive;
    const double omega_m = vertical_frequency(site, lev);
    const double kappa = linewidth(drive.finesse, lev.geometry.nominal_length);
    const double laser = drive.laser_frequency();
    const auto forces = radiation_force(MirrorPose{site.position}, lev, false);
    std::vector<Beam> beams;
    for (int n = 0; n < kCavities; ++n) {
        const auto& cavity = forces.cavities[n];
        if (drive.trap_power[n] > 0.0)
            beams.push_back({mode_photons(cavity.circulating_power, cavity.length, laser),
                             phase_to_detuning(cavity.phase, cavity.length)});
        if (drive.cool_power[n] > 0.0) {
            const double detuning = drive.cool_detuning_auto ? -omega_m : drive.cool_detuning[n];
            const double s = std::sin(detuning_to_phase(detuning, cavity.length));
            const double power = drive.cool_power[n] * drive.finesse / (1.0 + drive.finesse * drive.finesse * s * s);
            beams.push_back({mode_photons(power, cavity.length, laser), detuning});
        }
    }
    const double coupling = optomechanical_coupling(laser, lev.mass, omega_m, lev.geometry.nominal_length);
    return sideband_cooling(beams, kappa, omega_m, coupling, gas.damping_rate, gas.thermal_phonons);
}

std::vector<PhononRow> min_phonon_vs_finesse(const std::vector<double>& finesses, const Levitator& lev,
                                             double trap_to_cool, unsigned threads) {
    if (!(trap_to_cool > 0.0))
        throw UsageError("trap-to-cooling power ratio must be positive");
    std::vector<PhononRow> rows(finesses.size());
    parallel_for(rows.size(), worker_threads(threads), [&](std::size_t i) {
        PhononRow& row = rows[i];
        row.finesse = finesses[i];
        row.kappa = linewidth(row.finesse, lev.geometry.nominal_length);
        try {
            Levitator tuned = supported_levitator(lev, row.finesse, 0.5);
            const TrapSite site = central_trap(tuned);
            for (int n = 0; n < kCavities; ++n)
                tuned.drive.cool_power[n] = tuned.drive.trap_power[n] / trap_to_cool;
            tuned.drive.cool_detuning_auto = true;
            const CoolingSummary summary = cooling_summary(site, tuned, GasBudget{});
            row.omega_m = summary.omega_m;
            row.min_phonons = summary.min_phonons;
            row.feasible = !summary.heating_dominated;
        } catch (const NumericalError&) {
            row.feasible = false;
        }
    });
    return rows;
}

double detected_photons(double power, double integration_time, double wavelength) {
    return power * integration_time * wavelength / (2.0 * pi * hbar * c);
}

double gravimetric_precision(double power, double integration_time, double wavelength) {
    if (!(power > 0.0 && integration_time > 0.0 && wavelength > 0.0))
        throw UsageError("power, integration time and wavelength must be positive");
    return 1.0 / std::sqrt(detected_photons(power, integration_time, wavelength));
}

}  // namespace levitation
