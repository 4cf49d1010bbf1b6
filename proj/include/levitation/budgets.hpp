#pragma once

#include "levitation/model.hpp"
#include "levitation/traps.hpp"

#include <limits>
#include <vector>

namespace levitation {

/// How a quoted mechanical frequency is read. Library APIs take angular
/// frequency; `cyclic` treats the number as Hz wherever it enters a formula.
enum class FrequencyConvention { angular, cyclic };

inline constexpr double kInfinite = std::numeric_limits<double>::infinity();

// Gas collisions

/// gamma_m = 2 rho_g v_g S / m.
double gas_damping(const Environment& env, const MirrorSpec& mirror);

/// Gamma_g at the characteristic speed v_g: P S v_g / (kB T).
double collision_rate(const Environment& env, const MirrorSpec& mirror);

/// Knudsen number of the mirror (mean free path over diameter).
double knudsen_number(const Environment& env, const MirrorSpec& mirror);

struct GasHeating {
    double power = 0.0;              // W, adaptive quadrature
    double closed_form_power = 0.0;  // W, Gaussian moment
    double thermal_phonons = 0.0;
};

/// Collisional heating power from the 1-D Maxwell-Boltzmann speed density and
/// the resulting thermal occupation Edot / (gamma_m hbar omega_m).
GasHeating gas_heating(const Environment& env, const MirrorSpec& mirror, double omega_m);

struct GasBudget {
    double damping_rate = 0.0;
    double collision_rate = 0.0;
    double heating_power = 0.0;
    double heating_power_closed_form = 0.0;
    double thermal_phonons = 0.0;
    double quality_factor = 0.0;  // omega_m / gamma_m under the chosen convention
    double knudsen = 0.0;
    bool free_molecular = true;
};

GasBudget gas_budget(const Environment& env, const MirrorSpec& mirror, double omega_m,
                     FrequencyConvention convention = FrequencyConvention::angular);

// Laser intensity noise

struct ParametricRates {
    double up = 0.0;
    double down = 0.0;
};

/// n -> n +- 2 transition rates; `s_eps_2omega` is S_eps at twice the mechanical frequency.
ParametricRates parametric_rates(long n, double omega_m, double s_eps_2omega);

struct LaserNoiseBudget {
    double heating_rate = 0.0;  // gamma_I, 1/s
    double efold_time = kInfinite;
    double s_eps_2omega = 0.0;
    ParametricRates ground_rates;  // at n = 0
};

/// gamma_I = omega^2 / 4 * S_eps(2 omega), tau_e = 1 / gamma_I.
LaserNoiseBudget intensity_heating(double omega_m, const NoiseSpectrum& spectrum,
                                   FrequencyConvention convention = FrequencyConvention::angular);

/// RMS fractional intensity noise of a flat spectrum over `bandwidth` (Hz)
/// that gives e-folding time `efold_time`.
double rms_requirement(double omega_m, double efold_time, double bandwidth,
                       FrequencyConvention convention = FrequencyConvention::angular);

// Blackbody

/// Closed-form absorbed (or emitted) thermal power: pi^2 S eps (kB T)^4 / (60 c^2 hbar^3).
double blackbody_power(double temperature, double area, double emissivity);

/// The same power from adaptive quadrature over wavenumber with Bose occupation.
double blackbody_power_quadrature(double temperature, double area, double emissivity);

struct ThermalBudget {
    double absorption_power = 0.0;   // W at T_env
    double emission_power = 0.0;     // W at T_int
    double laser_absorbed_power = 0.0;
    double internal_temperature = 0.0;
    double delta_t = 0.0;
};

/// Solves laser + absorb(T_env) = emit(T_int) by bisection on [T_env, T_env + 1e4 K].
ThermalBudget blackbody_balance(const Environment& env, const MirrorSpec& mirror, double laser_absorbed_power);

/// Coating absorption times the total circulating power at `position`.
double laser_absorbed_power(const Vec3& position, const Levitator& lev, const MirrorSpec& mirror);

// Sideband cooling

struct Beam {
    double photons = 0.0;   // n-bar
    double detuning = 0.0;  // rad/s, > 0 blue
};

/// S(omega) = n kappa / ((kappa / 2)^2 + (omega + delta)^2).
double sideband_spectrum(const Beam& beam, double kappa, double omega);

/// n-bar = P_circ L / (hbar omega_c c).
double mode_photons(double circulating_power, double length, double laser_frequency);

/// G = omega_c sqrt(hbar / (2 m omega_m)) / L_0.
double optomechanical_coupling(double laser_frequency, double mass, double omega_m, double length);

struct CoolingSummary {
    double coupling = 0.0;
    double kappa = 0.0;
    double omega_m = 0.0;
    double s_plus = 0.0;   // sum over beams of S(+omega_m)
    double s_minus = 0.0;  // sum over beams of S(-omega_m)
    double cooling_rate = 0.0;  // gamma_rp, > 0 cools
    double ratio = 0.0;         // s_plus / s_minus
    bool heating_dominated = false;
    double min_phonons = kInfinite;
    double combined_phonons = kInfinite;
    std::vector<Beam> beams;
};

/// Evaluates the cooling balance for the given beams (photon numbers per cavity).
CoolingSummary sideband_cooling(const std::vector<Beam>& beams, double kappa, double omega_m, double coupling,
                                double gas_damping_rate, double thermal_phonons);

/// Cooling balance of the vertical mode at a trap site: each cavity's trap beam
/// plus its cooling beam from `lev.drive` (delta_2 = -omega_m when automatic).
CoolingSummary cooling_summary(const TrapSite& site, const Levitator& lev, const GasBudget& gas);

/// Vertical mode frequency of a stable site.
double vertical_frequency(const TrapSite& site, const Levitator& lev);

struct PhononRow {
    double finesse = 0.0;
    bool feasible = false;
    double omega_m = 0.0;
    double kappa = 0.0;
    double min_phonons = kInfinite;
};

/// Minimum phonon number per finesse: support at 0.5 kappa, delta_2 = -omega_m, cooling input
/// power 1 / trap_to_cool times the trapping input power.
std::vector<PhononRow> min_phonon_vs_finesse(const std::vector<double>& finesses, const Levitator& lev,
                                             double trap_to_cool = 0.1, unsigned threads = 0);

// Gravimetry

/// Photons detected: P t lambda / (2 pi hbar c).
double detected_photons(double power, double integration_time, double wavelength);

/// delta g / g = 1 / sqrt(n_ph).
double gravimetric_precision(double power, double integration_time, double wavelength);

}  // namespace levitation
