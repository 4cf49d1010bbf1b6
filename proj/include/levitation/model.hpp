#pragma once

#include <Eigen/Dense>

#include <array>
#include <numbers>

namespace levitation {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr int kCavities = 3;

// CODATA 2018 exact / recommended values, plus standard gravity.
namespace constants {
inline constexpr double c = 299792458.0;           // m/s
inline constexpr double hbar = 1.054571817e-34;    // J s
inline constexpr double kB = 1.380649e-23;         // J/K
inline constexpr double g0 = 9.80665;              // m/s^2
inline constexpr double pi = std::numbers::pi;
}  // namespace constants

struct PhysicalConstants {
    double c = constants::c;
    double hbar = constants::hbar;
    double kB = constants::kB;
    double g0 = constants::g0;
};

inline constexpr PhysicalConstants kConstants{};

/// The levitated (top) mirror. Mass is an input, not derived from the shape.
struct MirrorSpec {
    double mass = 3e-7;                   // kg
    double radius_of_curvature = 0.03;    // m, convex
    double diameter = 2e-3;               // m
    double emissivity = 2e-4;
    double absorption_coefficient = 1e-5; // 1/m, bulk; kept as metadata
    double coating_absorption = 1e-6;     // fraction of circulating power absorbed per reflection

    double cross_section() const {
        const double radius = 0.5 * diameter;
        return constants::pi * radius * radius;
    }
};

/// Three lower mirrors whose centres of curvature q_n are related by 120 degree
/// rotations about the vertical axis through the nominal pose (the origin).
struct TripodGeometry {
    std::array<Vec3, kCavities> q{};
    double radius_bottom = 0.20;   // R_b
    double radius_top = 0.03;      // R_t
    double nominal_length = 0.18;  // L_0
    double tilt = 0.0;             // rad, angle of each cavity axis from vertical

    /// Builds the symmetric tripod: at r = 0 every cavity has length L_0 and its
    /// axis (from q_n towards r) is tilted by `tilt` from +z, azimuths 0/120/240 deg.
    static TripodGeometry symmetric(double radius_bottom, double radius_top, double nominal_length,
                                    double tilt);

    /// Unit vector from q_n to the nominal pose.
    Vec3 nominal_axis(int n) const;

    Vec3 centroid() const { return (q[0] + q[1] + q[2]) / 3.0; }
};

/// Reduced pose of the top mirror: its centre of curvature. The z-x-z Euler
/// angles alpha and gamma are carried along but never enter the optics; beta is 0.
struct MirrorPose {
    Vec3 r = Vec3::Zero();
    double alpha = 0.0;
    double gamma = 0.0;
};

struct BeamDrive {
    std::array<double, kCavities> trap_power{};        // W, coupled input power
    std::array<double, kCavities> trap_detuning{};     // rad/s, design detuning (support target)
    std::array<double, kCavities> cool_power{};        // W
    std::array<double, kCavities> cool_detuning{};     // rad/s, used unless cool_detuning_auto
    bool cool_detuning_auto = true;                    // delta_2 = -omega_m
    std::array<double, kCavities> frequency_offset{};  // rad/s, trap laser offset per beam
    double wavelength = 1064e-9;
    double finesse = 1000.0;

    double wavenumber() const { return 2.0 * constants::pi / wavelength; }
    /// Wavenumber of the trapping laser of cavity n including its frequency offset.
    double wavenumber(int n) const { return wavenumber() + frequency_offset[n] / constants::c; }
    double laser_frequency() const { return constants::c * wavenumber(); }
    double total_trap_power() const { return trap_power[0] + trap_power[1] + trap_power[2]; }
};

/// One-sided fractional intensity noise spectrum S_eps(omega): flat at `level`
/// (1/Hz) up to `bandwidth` (Hz), zero above. bandwidth == 0 means white.
struct NoiseSpectrum {
    double level = 0.0;
    double bandwidth = 0.0;

    double operator()(double omega) const {
        if (bandwidth > 0.0 && omega / (2.0 * constants::pi) > bandwidth)
            return 0.0;
        return level;
    }
};

struct Environment {
    double pressure = 1e-3;            // Pa
    double temperature = 300.0;        // K
    double gas_mass = 4.65e-26;        // kg, N2
    double molecule_diameter = 3.7e-10;  // m, kinetic diameter of N2
    NoiseSpectrum intensity_noise{};

    /// Ideal-gas mass density.
    double gas_density() const { return pressure * gas_mass / (constants::kB * temperature); }
    /// sqrt(2 kB T / m_g).
    double gas_speed() const;
    double mean_free_path() const;
};

struct SimulationConfig {
    MirrorSpec mirror;
    TripodGeometry geometry;
    BeamDrive drive;
    Environment environment;
};

/// Everything the static force field depends on: geometry, trapping drive, mass
/// and the gravitational acceleration vector (rotatable with the apparatus).
struct Levitator {
    TripodGeometry geometry;
    BeamDrive drive;
    double mass = 3e-7;
    Vec3 gravity{0.0, 0.0, -constants::g0};

    static Levitator from_config(const SimulationConfig& config);

    double weight() const { return mass * gravity.norm(); }
};

}  // namespace levitation
