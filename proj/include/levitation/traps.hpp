#pragma once

#include "levitation/model.hpp"
#include "levitation/potential.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace levitation {

struct TrapSite {
    Vec3 position = Vec3::Zero();
    std::array<double, kCavities> detunings{};  // delta_n / kappa
    Mat3 stiffness = Mat3::Zero();               // N/m
    std::array<double, 3> frequencies{};         // rad/s, ascending
    Vec3 extents = Vec3::Zero();                 // m, along the principal axes
    bool stable = false;
};

struct EquilibriumOptions {
    int max_iter = 200;
    double gradient_tolerance = 1e-15;  // N
    double step_tolerance = 1e-15;      // m
    HessianSteps steps{};
};

struct EquilibriumResult {
    bool converged = false;
    int iterations = 0;
    TrapSite site;  // last iterate when not converged
    std::string message;
};

/// Damped Newton iteration on grad U = 0. Steps are limited so that no cavity
/// phase moves by more than a fraction of the resonance width, and each step
/// must lower U or the gradient norm. A singular Hessian falls back to a
/// gradient step.
EquilibriumResult find_equilibrium(const MirrorPose& seed, const Levitator& lev,
                                   const EquilibriumOptions& options = {});

/// Eigen-classifies the stiffness at `position` and fills every field of
/// TrapSite except `extents`.
TrapSite classify_site(const Vec3& position, const Levitator& lev, const HessianSteps& steps = {});

struct SupportOptions {
    double min_power = 1e-3;   // W, total
    double max_power = 1e3;    // W, total
    double relative_tolerance = 1e-9;
};

/// Total trapping power for which the symmetric pose is in vertical force
/// balance with every cavity at `detuning_fraction` * kappa. The split
/// between beams follows `lev.drive.trap_power` (equal when all zero).
double solve_support_power(double detuning_fraction, const Levitator& lev, const SupportOptions& options = {});

/// Copy of `lev` carrying `total_power` split like `lev.drive.trap_power`.
Levitator with_total_power(const Levitator& lev, double total_power);

/// Solves L_n(r) = (branch_n pi + phase_n) / k_n for r by Newton iteration.
std::optional<Vec3> solve_cavity_lengths(const std::array<long long, kCavities>& branch,
                                         const std::array<double, kCavities>& phase, const Vec3& seed,
                                         const Levitator& lev);

/// Residual phase at which the symmetric on-axis pose balances gravity with
/// the configured powers, blue side. Empty when the beams cannot lift the mirror.
std::optional<double> support_phase(const Levitator& lev);

/// The on-axis trap nearest the nominal pose, polished to the equilibrium.
TrapSite central_trap(const Levitator& lev, const EquilibriumOptions& options = {});

struct Region {
    Vec3 lower = Vec3::Zero();
    Vec3 upper = Vec3::Zero();

    bool contains(const Vec3& r) const {
        return (r.array() >= lower.array()).all() && (r.array() <= upper.array()).all();
    }
    bool empty() const { return (upper.array() < lower.array()).any(); }
};

/// 60 um x 60 um horizontally, from 30 nm below to 10 nm above the central trap.
Region default_scan_region(const Levitator& lev);

struct ScanOptions {
    double horizontal_step = 0.0;  // m; 0 selects lambda / 8
    double vertical_step = 0.2e-9;  // m
    std::size_t max_seeds = 200'000'000;
    double dedup_radius = 1e-9;    // m
    bool compute_extents = true;
    unsigned threads = 0;          // 0: hardware concurrency or LEVITATE_THREADS
    EquilibriumOptions equilibrium{};
};

struct SpacingStats {
    std::size_t sites = 0;
    double mean_nearest = 0.0;  // m, xy-plane
    double min_nearest = 0.0;
    double max_nearest = 0.0;
    std::size_t central_index = 0;
    std::size_t central_neighbours = 0;
    double max_angle_error = 0.0;  // rad, neighbour angles vs 60 degrees
    bool triangular = false;
};

struct LatticeScan {
    std::vector<TrapSite> sites;  // lexicographic by position
    SpacingStats spacing;
    std::size_t seeds = 0;
    std::size_t candidates = 0;
};

LatticeScan scan_lattice(const Region& region, const Levitator& lev, const ScanOptions& options = {});

/// Spacing statistics in the plane orthogonal to gravity. The central site is
/// the one nearest the centroid of the lower mirrors' centres of curvature
/// clamped into `region`.
SpacingStats lattice_spacing(const std::vector<TrapSite>& sites, const Region& region, const Levitator& lev);

/// Principal axes of the stiffness, ordered like the ascending eigenvalues.
/// Axes inside a degenerate eigenspace are aligned with the apparatus frame.
Mat3 principal_axes(const Mat3& stiffness, const Levitator& lev);

/// Isopotential half-widths at the escape level, the lowest 1-D barrier found
/// along any principal axis. Throws UnstableSiteError for unstable sites.
Vec3 trap_extents(const TrapSite& site, const Levitator& lev);

unsigned worker_threads(unsigned requested = 0);

}  // namespace levitation
