#pragma once

#include "levitation/integrator.hpp"
#include "levitation/model.hpp"

#include <array>
#include <complex>
#include <limits>
#include <vector>

namespace levitation {

struct MechState {
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    double time = 0.0;
};

/// Complex amplitudes, one per optical mode of a DynamicModel, normalized so
/// that |a|^2 is the intracavity photon number.
struct FieldState {
    std::vector<std::complex<double>> amplitudes;
};

struct TrajectorySample {
    double time = 0.0;
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    std::array<double, kCavities> photons{};  // trapping mode of each cavity
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
    IntegratorStats stats;
};

struct QuasistaticOptions {
    double extra_damping = 0.0;  // 1/s
    double duration = 0.0;       // s
    double dt_max = std::numeric_limits<double>::infinity();
    double output_interval = 0.0;  // s; 0 gives 1000 intervals
    double relative_tolerance = 1e-10;
    double length_scale = 0.0;  // m, absolute-tolerance scale; 0 derives it from the initial state
    Scheme scheme = Scheme::fehlberg_78;
};

/// m r'' = -grad U(r) - m gamma r'. Integrated as the displacement from the
/// initial position.
Trajectory simulate_quasistatic(const MechState& initial, const Levitator& lev, const QuasistaticOptions& options);

/// Kinetic energy plus U(r) - U(reference).
double mechanical_energy(const Vec3& position, const Vec3& velocity, const Levitator& lev, const Vec3& reference);

/// Photon number n = 2 P L / (hbar omega c) whose radiation force hbar (omega / L) n
/// equals 2 P / c.
double photon_number(double circulating_power, double length, double laser_frequency);

/// A driven single-mode cavity field coupled to the mirror through its length.
struct OpticalMode {
    int cavity = 0;
    double detuning = 0.0;  // rad/s at the reference pose, > 0 blue
    double decay = 0.0;     // kappa, rad/s
    double pull = 0.0;      // G = omega / L, rad/s per m
    double drive = 0.0;     // epsilon, sqrt(photons) rad/s
    bool trapping = true;
};

/// Field equation per mode:  a' = (i (delta + G u) - kappa / 2) a + epsilon,
/// with u = L_n(r) - L_n(reference) and force hbar G |a|^2 along the cavity axis.
struct DynamicModel {
    Levitator lev;
    Vec3 reference = Vec3::Zero();
    std::array<long double, kCavities> reference_length{};
    std::vector<OpticalMode> modes;

    /// One trapping mode per powered cavity, with detuning read from the
    /// cavity phase at `reference` and drive chosen so the steady state carries
    /// the circulating power of the static model there.
    static DynamicModel from_quasistatic(const Levitator& lev, const Vec3& reference);

    /// Adds a cooling mode to each cavity with `input_power` per cavity at
    /// `detuning` (rad/s) from the reference resonance.
    void add_cooling(double input_power, double detuning);

    /// Multiplies every drive so that the steady-state force at the reference
    /// balances gravity along the vertical.
    void balance_weight();

    std::vector<std::complex<double>> steady_state(const Vec3& r) const;
    FieldState steady_fields(const Vec3& r) const { return {steady_state(r)}; }

    /// Radiation force of the given fields plus weight.
    Vec3 force(const Vec3& r, const std::vector<std::complex<double>>& amplitudes) const;

    /// Gradient of the adiabatic (steady-state) force, sign-flipped: K = -dF/dr.
    Mat3 adiabatic_stiffness(const Vec3& r, bool trapping_only = false, bool cooling_only = false) const;

    /// sqrt of the vertical adiabatic stiffness eigenvalue over mass; 0 when not positive.
    double vertical_frequency(const Vec3& r) const;
};

/// Trap-mode model at `reference` plus a red cooling mode per cavity carrying
/// `power_ratio` times the trap input power at delta_2 = -omega_m, where omega_m
/// is iterated to self-consistency with the cooled adiabatic stiffness. Drives
/// are rebalanced so `reference` stays the equilibrium.
DynamicModel cooled_model(const Levitator& lev, const Vec3& reference, double power_ratio);

struct DynamicOptions {
    double duration = 0.0;
    double dt_max = std::numeric_limits<double>::infinity();
    double output_interval = 0.0;  // 0 gives 1000 intervals
    double relative_tolerance = 1e-10;
    double length_scale = 0.0;
    bool clamped = false;  // hold the mirror fixed
    Scheme scheme = Scheme::dormand_prince_54;
};

/// Integrates mirror and fields together. `fields` must carry one amplitude per
/// model mode.
Trajectory simulate_dynamic(const MechState& initial, const FieldState& fields, const DynamicModel& model,
                            const DynamicOptions& options);

/// Upward crossings of (x(t) . axis - level), linearly interpolated.
std::vector<double> upward_crossings(const Trajectory& trajectory, const Vec3& axis, double level);

/// Mean oscillation frequency (rad/s) from upward crossings; 0 with fewer than two.
double crossing_frequency(const Trajectory& trajectory, const Vec3& axis, double level);

struct EnvelopeFit {
    double rate = 0.0;       // 1/s, d ln(amplitude) / dt
    bool monotonic = false;  // successive peaks strictly follow the sign of rate
    std::size_t peaks = 0;
    double first_amplitude = 0.0;
    double last_amplitude = 0.0;
};

/// Least-squares fit of ln|x - level| at half-cycle peaks (parabolic refinement)
/// after discarding the first `skip_periods` periods. Needs `min_periods` peaks.
EnvelopeFit fit_envelope(const Trajectory& trajectory, const Vec3& axis, double level, double skip_periods = 5.0,
                         std::size_t min_periods = 20);

}  // namespace levitation
