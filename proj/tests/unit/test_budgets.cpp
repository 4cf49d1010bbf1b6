#include <doctest.h>

#include "levitation/budgets.hpp"
#include "levitation/config.hpp"
#include "levitation/errors.hpp"
#include "levitation/traps.hpp"

#include <cmath>

using namespace levitation;

namespace {

Levitator nominal() { return Levitator::from_config(default_config()); }

constexpr double kStefanBoltzmann = 5.670374419e-8;

}  // namespace

TEST_SUITE("budgets") {

TEST_CASE("gas damping vanishes in vacuum and scales with pressure") {
    const MirrorSpec mirror;
    Environment env;
    const double base = gas_damping(env, mirror);
    CHECK(base >= 1e-5);
    CHECK(base <= 1e-3);
    env.pressure *= 3.0;
    CHECK(gas_damping(env, mirror) == doctest::Approx(3.0 * base).epsilon(1e-14));
    env.pressure = 0.0;
    CHECK(gas_damping(env, mirror) == 0.0);
    const GasBudget vacuum = gas_budget(env, mirror, 1e5);
    CHECK(vacuum.damping_rate == 0.0);
    CHECK(vacuum.heating_power == 0.0);
    CHECK(vacuum.quality_factor == kInfinite);
}

TEST_CASE("collisional heating fades with light molecules") {
    const MirrorSpec mirror;
    Environment env;
    const double heavy = gas_heating(env, mirror, 1e5).power;
    env.gas_mass *= 1e-6;
    const double light = gas_heating(env, mirror, 1e5).power;
    CHECK(light == doctest::Approx(1e-3 * heavy).epsilon(1e-9));
    CHECK(gas_heating(env, mirror, 1e5).power == doctest::Approx(gas_heating(env, mirror, 1e5).closed_form_power).epsilon(1e-10));
    CHECK_THROWS_AS(gas_heating(env, mirror, 0.0), UsageError);
}

TEST_CASE("cyclic convention converts the frequency inside the heating budget") {
    const MirrorSpec mirror;
    const Environment env;
    const GasBudget angular = gas_budget(env, mirror, 5e5);
    const GasBudget cyclic = gas_budget(env, mirror, 5e5, FrequencyConvention::cyclic);
    CHECK(cyclic.quality_factor == angular.quality_factor);
    CHECK(cyclic.thermal_phonons == doctest::Approx(angular.thermal_phonons / (2.0 * constants::pi)).epsilon(1e-10));
}

TEST_CASE("parametric transition rates") {
    const double omega = 2e5;
    const double s = 1e-12;
    const double scale = constants::pi * omega * omega / 16.0 * s;
    const ParametricRates ground = parametric_rates(0, omega, s);
    CHECK(ground.up == doctest::Approx(2.0 * scale));
    CHECK(ground.down == 0.0);
    const ParametricRates two = parametric_rates(2, omega, s);
    CHECK(two.up == doctest::Approx(12.0 * scale));
    CHECK(two.down == doctest::Approx(2.0 * scale));
    const ParametricRates quiet = parametric_rates(5, omega, 0.0);
    CHECK(quiet.up == 0.0);
    CHECK(quiet.down == 0.0);
    CHECK_THROWS_AS(parametric_rates(-1, omega, s), UsageError);
}

TEST_CASE("intensity heating scales with the noise level and inverts to an rms requirement") {
    const double omega = 2.0 * constants::pi * 1e5;
    NoiseSpectrum spectrum{1e-14, 0.0};
    const LaserNoiseBudget base = intensity_heating(omega, spectrum);
    spectrum.level *= 4.0;
    const LaserNoiseBudget louder = intensity_heating(omega, spectrum);
    CHECK(louder.heating_rate == doctest::Approx(4.0 * base.heating_rate).epsilon(1e-14));
    CHECK(base.efold_time == doctest::Approx(1.0 / base.heating_rate));

    const double bandwidth = 3e5;
    const double rms = 7e-4;
    const NoiseSpectrum flat{rms * rms / bandwidth, 0.0};
    const double tau = intensity_heating(omega, flat).efold_time;
    CHECK(rms_requirement(omega, tau, bandwidth) == doctest::Approx(rms).epsilon(0.05));

    CHECK(intensity_heating(omega, NoiseSpectrum{}).efold_time == kInfinite);
    const NoiseSpectrum band_limited{1e-14, 1e3};
    CHECK(intensity_heating(omega, band_limited).heating_rate == 0.0);
    CHECK_THROWS_AS(rms_requirement(omega, 1.0, 0.0), UsageError);
}

TEST_CASE("blackbody power follows the Stefan-Boltzmann law") {
    const double area = 3.1e-6;
    const double eps = 2e-4;
    const double expected = kStefanBoltzmann * std::pow(300.0, 4) * area * eps;
    CHECK(blackbody_power(300.0, area, eps) == doctest::Approx(expected).epsilon(1e-6));
    CHECK(blackbody_power(300.0, 1.0, 1.0) == doctest::Approx(459.3).epsilon(1e-3));
    CHECK(blackbody_power_quadrature(300.0, area, eps) == doctest::Approx(expected).epsilon(1e-6));
    CHECK(blackbody_power_quadrature(0.0, area, eps) == 0.0);
}

TEST_CASE("thermal balance") {
    const Environment env;
    MirrorSpec mirror;
    const ThermalBudget dark = blackbody_balance(env, mirror, 0.0);
    CHECK(dark.delta_t == 0.0);
    const ThermalBudget lit = blackbody_balance(env, mirror, 1e-7);
    CHECK(lit.delta_t > 0.0);
    CHECK(lit.emission_power == doctest::Approx(lit.absorption_power + lit.laser_absorbed_power).epsilon(1e-9));
    mirror.emissivity *= 2.0;
    CHECK(blackbody_balance(env, mirror, 1e-7).delta_t < lit.delta_t);
    CHECK_THROWS_AS(blackbody_balance(env, mirror, 1e3), InfeasibleError);
    CHECK_THROWS_AS(blackbody_balance(env, mirror, -1.0), UsageError);
}

TEST_CASE("laser absorption follows the circulating power") {
    const Levitator lev = nominal();
    const TrapSite site = central_trap(lev);
    MirrorSpec mirror;
    const double base = laser_absorbed_power(site.position, lev, mirror);
    CHECK(base > 0.0);
    mirror.coating_absorption *= 2.0;
    CHECK(laser_absorbed_power(site.position, lev, mirror) == doctest::Approx(2.0 * base));
}

TEST_CASE("combined occupation interpolates between its limits") {
    const double kappa = 1e6;
    const double omega = 2e5;
    const std::vector<Beam> beams{{1e8, -omega}};
    const double coupling = 1e-3;
    const double n_th = 1e6;
    const CoolingSummary pure = sideband_cooling(beams, kappa, omega, coupling, 0.0, n_th);
    REQUIRE_FALSE(pure.heating_dominated);
    CHECK(pure.cooling_rate > 0.0);
    CHECK(pure.combined_phonons == pure.min_phonons);
    CHECK(pure.min_phonons == doctest::Approx(1.0 / (pure.ratio - 1.0)));

    const CoolingSummary mixed = sideband_cooling(beams, kappa, omega, coupling, pure.cooling_rate, n_th);
    CHECK(mixed.combined_phonons > pure.min_phonons);
    CHECK(mixed.combined_phonons < n_th);
    CHECK(mixed.combined_phonons == doctest::Approx(0.5 * (pure.min_phonons + n_th)));

    const CoolingSummary weak = sideband_cooling({{1e-6, -omega}}, kappa, omega, coupling, 1.0, n_th);
    CHECK(weak.combined_phonons == doctest::Approx(n_th).epsilon(1e-6));
}

TEST_CASE("cooling rate is linear in photons and a detuning swap inverts the ratio") {
    const double kappa = 1e6;
    const double omega = 3e5;
    const CoolingSummary a = sideband_cooling({{1e8, -omega}}, kappa, omega, 1e-3, 0.0, 0.0);
    const CoolingSummary b = sideband_cooling({{3e8, -omega}}, kappa, omega, 1e-3, 0.0, 0.0);
    CHECK(b.cooling_rate == doctest::Approx(3.0 * a.cooling_rate).epsilon(1e-14));
    CHECK(b.ratio == doctest::Approx(a.ratio).epsilon(1e-14));

    const CoolingSummary blue = sideband_cooling({{1e8, omega}}, kappa, omega, 1e-3, 0.0, 0.0);
    CHECK(blue.ratio == doctest::Approx(1.0 / a.ratio).epsilon(1e-12));
    CHECK(blue.heating_dominated);
    CHECK(blue.cooling_rate < 0.0);
    CHECK(blue.min_phonons == kInfinite);
    CHECK(blue.combined_phonons == kInfinite);

    const Beam beam{2e7, -omega};
    CHECK(sideband_spectrum(beam, kappa, omega) == doctest::Approx(4.0 * 2e7 / kappa));
    CHECK(sideband_spectrum(beam, kappa, -omega) == doctest::Approx(2e7 * kappa / (0.25 * kappa * kappa + 4.0 * omega * omega)));
}

TEST_CASE("photon number and coupling") {
    const double laser = 2.0 * constants::pi * constants::c / 1064e-9;
    CHECK(mode_photons(1.0, 0.1, laser) * constants::hbar * laser * constants::c / 0.1 == doctest::Approx(1.0));
    const double g = optomechanical_coupling(laser, 3e-7, 1e5, 0.1);
    CHECK(g == doctest::Approx(laser / 0.1 * std::sqrt(constants::hbar / (2.0 * 3e-7 * 1e5))));
}

TEST_CASE("low finesse cannot reach the ground state") {
    const auto rows = min_phonon_vs_finesse({1000.0}, nominal());
    REQUIRE(rows.size() == 1);
    REQUIRE(rows[0].feasible);
    CHECK(rows[0].min_phonons > 1.0);
    CHECK(rows[0].omega_m > 0.0);
    CHECK_THROWS_AS(min_phonon_vs_finesse({1000.0}, nominal(), 0.0), UsageError);
}

TEST_CASE("gravimetric precision") {
    const double lambda = 1064e-9;
    const double base = gravimetric_precision(1e-3, 1.0, lambda);
    CHECK(gravimetric_precision(1e-3, 4.0, lambda) == doctest::Approx(0.5 * base).epsilon(1e-14));
    CHECK(gravimetric_precision(2e-3, 1.0, lambda) < base);
    const double photons = 1e-3 * 1.0 / (2.0 * constants::pi * constants::hbar * constants::c / lambda);
    CHECK(detected_photons(1e-3, 1.0, lambda) == doctest::Approx(photons).epsilon(1e-14));
    CHECK_THROWS_AS(gravimetric_precision(0.0, 1.0, lambda), UsageError);
}

}
