#pragma once

#include "levitation/model.hpp"

#include <array>

namespace levitation {

/// k L split as branch * pi + residual with residual in (-pi/2, pi/2].
/// Computed in extended precision: k L is ~1e6 rad, the residual needs ~1e-12.
struct CavityPhase {
    long long branch = 0;
    double residual = 0.0;
};

CavityPhase cavity_phase(double wavenumber, long double length);

/// Phase of a cavity of length base + separation. Products and the pi reduction
/// are carried with error terms, so the residual keeps ~1e-18 rad absolute accuracy.
CavityPhase cavity_phase(double wavenumber, long double base, long double separation);

/// Phase of cavity n with the top mirror at r.
CavityPhase cavity_phase_at(const Vec3& r, const TripodGeometry& geometry, int n, double wavenumber);

/// Distance ||q_n - r|| in extended precision; throws on coincident points.
long double centre_separation(const Vec3& r, const Vec3& q);

/// L_n = R_b - R_t + ||q_n - r||.
std::array<double, kCavities> cavity_lengths(const MirrorPose& pose, const TripodGeometry& geometry);

/// P = P_in F / (1 + F^2 sin^2(k L)).
double circulating_power(double input_power, double finesse, double wavenumber, double length);
double circulating_power_at_phase(double input_power, double finesse, double phase);

/// kappa = pi c / (F L_0), rad/s.
double linewidth(double finesse, double nominal_length);

/// Round-trip phase offset of a detuned laser: phi = delta L / c.
double detuning_to_phase(double detuning, double length);
double phase_to_detuning(double phase, double length);
/// delta / kappa for a residual phase, evaluated at the nominal length.
double normalized_detuning(double phase, double finesse);

struct CavityState {
    double length = 0.0;
    Vec3 axis = Vec3::UnitZ();  // from q_n towards r
    double phase = 0.0;         // residual of k L in (-pi/2, pi/2]
    long long branch = 0;
    double circulating_power = 0.0;
    Vec3 force = Vec3::Zero();
};

struct ForceResult {
    Vec3 total = Vec3::Zero();
    std::array<CavityState, kCavities> cavities{};
};

/// Radiation force (2 P_n / c along each axis, lengthening the cavity) and,
/// optionally, the weight of the mirror.
ForceResult radiation_force(const MirrorPose& pose, const Levitator& lev, bool include_gravity = true);

}  // namespace levitation
