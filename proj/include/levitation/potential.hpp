#pragma once

#include "levitation/model.hpp"

#include <array>
#include <vector>

namespace levitation {

/// Finite-difference steps for the Hessian, applied along the apparatus frame
/// (vertical = against gravity).
struct HessianSteps {
    double horizontal = 1e-10;  // m
    double vertical = 1e-12;    // m
};

struct PotentialSample {
    double value = 0.0;                       // J
    Vec3 gradient = Vec3::Zero();             // N
    Mat3 hessian = Mat3::Zero();              // N/m
    std::array<long long, kCavities> branch{};  // arctan unwrap counters N_n
};

/// Generalized potential of the reduced model,
///
///   U(r) = - sum_n (2 P_n / c) [pi (N_n - N_n^0) + arctan(F tan phi_n)] / k + m g z,
///
/// with k L_n = N_n pi + phi_n, phi_n in (-pi/2, pi/2]. The branch term makes U
/// continuous across phi_n = pi/2; N_n^0 is the branch at the nominal length,
/// which only fixes the additive constant. Each optical term decreases with
/// L_n, so that -grad U reproduces radiation pressure pushing the mirror away.
double potential(const Vec3& r, const Levitator& lev);

/// Analytic gradient dU/dr (N).
Vec3 gradient(const Vec3& r, const Levitator& lev);

/// Central differences of the analytic gradient, symmetrized.
Mat3 hessian(const Vec3& r, const Levitator& lev, const HessianSteps& steps = {});

PotentialSample sample_potential(const Vec3& r, const Levitator& lev, const HessianSteps& steps = {});

inline double potential(const MirrorPose& pose, const Levitator& lev) { return potential(pose.r, lev); }
inline Vec3 gradient(const MirrorPose& pose, const Levitator& lev) { return gradient(pose.r, lev); }
inline Mat3 hessian(const MirrorPose& pose, const Levitator& lev, const HessianSteps& steps = {}) {
    return hessian(pose.r, lev, steps);
}

/// dU_n/dL_n for one cavity at residual phase phi: -(2 P_in / c) F / (cos^2 + F^2 sin^2).
double cavity_potential_slope(double input_power, double finesse, double phase);

/// Orthonormal frame whose third column points against gravity and whose first
/// column points horizontally towards the first lower mirror.
Mat3 apparatus_frame(const Levitator& lev);

struct GridSample {
    Vec3 position;
    double value;
};

/// Samples U on a planar grid centred on `centre`, spanned by unit vectors
/// `u` and `v` with half-widths `half_u`, `half_v` and `count` points per side.
std::vector<GridSample> potential_grid(const Vec3& centre, const Vec3& u, const Vec3& v, double half_u,
                                       double half_v, int count, const Levitator& lev);

}  // namespace levitation
