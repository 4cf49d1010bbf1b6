#include "levitation/traps.hpp"

#include "levitation/errors.hpp"
#include "levitation/optics.hpp"
#include "levitation/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <set>
#include <string>

namespace levitation {

namespace {

using Branches = std::array<long long, kCavities>;

Vec3 unit_axis(const Vec3& r, const Vec3& q) {
    return (r - q) / static_cast<double>(centre_separation(r, q));
}

// Largest step that moves no cavity phase by more than `fraction` of the
// resonance half-width 1/F.
double phase_trust(const Vec3& r, const Vec3& step, const Levitator& lev, double fraction) {
    double worst = 0.0;
    for (int n = 0; n < kCavities; ++n) {
        if (lev.drive.trap_power[n] == 0.0)
            continue;
        worst = std::max(worst, std::abs(unit_axis(r, lev.geometry.q[n]).dot(step)) * lev.drive.wavenumber(n));
    }
    worst *= lev.drive.finesse;
    return worst > fraction ? fraction / worst : 1.0;
}

double resonance_scale(const Levitator& lev) {
    return 1.0 / (lev.drive.finesse * lev.drive.wavenumber());
}

Vec3 up_direction(const Levitator& lev) { return -lev.gravity.normalized(); }

std::array<double, kCavities> power_shape(const Levitator& lev) {
    std::array<double, kCavities> shape{};
    const double total = lev.drive.total_trap_power();
    for (int n = 0; n < kCavities; ++n)
        shape[n] = total > 0.0 ? lev.drive.trap_power[n] / total : 1.0 / kCavities;
    return shape;
}

}  // namespace

unsigned worker_threads(unsigned requested) {
    if (requested > 0)
        return requested;
    if (const char* env = std::getenv("LEVITATE_THREADS")) {
        const long value = std::strtol(env, nullptr, 10);
        if (value > 0)
            return static_cast<unsigned>(value);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

TrapSite classify_site(const Vec3& position, const Levitator& lev, const HessianSteps& steps) {
    TrapSite site;
    site.position = position;
    site.stiffness = hessian(position, lev, steps);
    const Eigen::SelfAdjointEigenSolver<Mat3> solver(site.stiffness, Eigen::EigenvaluesOnly);
    const Vec3 eigenvalues = solver.eigenvalues();
    site.stable = (eigenvalues.array() > 0.0).all();
    for (int i = 0; i < 3; ++i)
        site.frequencies[i] = std::sqrt(std::max(eigenvalues[i], 0.0) / lev.mass);
    for (int n = 0; n < kCavities; ++n) {
        const auto phase = cavity_phase_at(position, lev.geometry, n, lev.drive.wavenumber(n));
        site.detunings[n] = normalized_detuning(phase.residual, lev.drive.finesse);
    }
    return site;
}

EquilibriumResult find_equilibrium(const MirrorPose& seed, const Levitator& lev, const EquilibriumOptions& options) {
    EquilibriumResult result;
    Vec3 r = seed.r;
    const double fallback_length = resonance_scale(lev);

    for (int iteration = 0; iteration < options.max_iter; ++iteration) {
        result.iterations = iteration + 1;
        const Vec3 g = gradient(r, lev);
        const double g_norm = g.norm();
        const Mat3 h = hessian(r, lev, options.steps);
        const Eigen::SelfAdjointEigenSolver<Mat3> solver(h);
        const Vec3 lambda = solver.eigenvalues();
        const double scale = lambda.cwiseAbs().maxCoeff();

        Vec3 step;
        if (!(scale > 0.0) || !std::isfinite(scale)) {
            step = g_norm > 0.0 ? Vec3(-fallback_length * g / g_norm) : Vec3::Zero();
        } else {
            // Newton step with |lambda|, so saddle directions are descended.
            step = Vec3::Zero();
            const Mat3& v = solver.eigenvectors();
            for (int i = 0; i < 3; ++i) {
                const double curvature = std::max(std::abs(lambda[i]), 1e-12 * scale);
                step -= (v.col(i).dot(g) / curvature) * v.col(i);
            }
        }

        if (g_norm < options.gradient_tolerance && step.norm() < options.step_tolerance) {
            r += step;
            result.converged = true;
            break;
        }

        step *= phase_trust(r, step, lev, 0.5);
        const double u0 = potential(r, lev);
        const double slope = g.dot(step);
        double alpha = 1.0;
        bool accepted = false;
        for (int attempt = 0; attempt < 40; ++attempt, alpha *= 0.5) {
            const Vec3 trial = r + alpha * step;
            if (potential(trial, lev) <= u0 + 1e-4 * alpha * slope || gradient(trial, lev).norm() < g_norm) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (g_norm < options.gradient_tolerance) {
                result.converged = true;
                break;
            }
            result.message = "line search stalled";
            break;
        }
        r += alpha * step;
    }

    if (!result.converged && result.message.empty())
        result.message = "no convergence in " + std::to_string(options.max_iter) + " iterations";
    result.site = classify_site(r, lev, options.steps);
    if (result.converged && gradient(r, lev).norm() >= options.gradient_tolerance) {
        result.converged = false;
        result.message = "gradient above tolerance at the final iterate";
    }
    return result;
}

Levitator with_total_power(const Levitator& lev, double total_power) {
    Levitator scaled = lev;
    const auto shape = power_shape(lev);
    for (int n = 0; n < kCavities; ++n)
        scaled.drive.trap_power[n] = shape[n] * total_power;
    return scaled;
}

double solve_support_power(double detuning_fraction, const Levitator& lev, const SupportOptions& options) {
    if (!(detuning_fraction > 0.0 && detuning_fraction < 1.0))
        throw UsageError("support detuning must lie in (0, 1) linewidths");
    const double finesse = lev.drive.finesse;
    const double phase = constants::pi * detuning_fraction / finesse;
    const double s = std::sin(phase);
    const Vec3 up = up_direction(lev);
    const auto shape = power_shape(lev);

    double lift_per_watt = 0.0;
    for (int n = 0; n < kCavities; ++n) {
        const double enhancement = finesse / (1.0 + finesse * finesse * s * s);
        lift_per_watt += shape[n] * (2.0 / constants::c) * enhancement * lev.geometry.nominal_axis(n).dot(up);
    }
    const double weight = lev.weight();
    auto excess = [&](double power) { return power * lift_per_watt - weight; };

    double lo = options.min_power;
    double hi = options.max_power;
    if (!(excess(lo) < 0.0 && excess(hi) > 0.0))
        throw InfeasibleError("no support power in [" + std::to_string(lo) + ", " + std::to_string(hi) + "] W");
    while ((hi - lo) > options.relative_tolerance * lo) {
        const double mid = 0.5 * (lo + hi);
        (excess(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::optional<Vec3> solve_cavity_lengths(const Branches& branch, const std::array<double, kCavities>& phase,
                                         const Vec3& seed, const Levitator& lev) {
    Vec3 r = seed;
    for (int iteration = 0; iteration < 60; ++iteration) {
        Mat3 jacobian;
        Vec3 residual;
        for (int n = 0; n < kCavities; ++n) {
            const double k = lev.drive.wavenumber(n);
            const auto current = cavity_phase_at(r, lev.geometry, n, k);
            const long double mismatch = static_cast<long double>(current.branch - branch[n]) * std::numbers::pi_v<long double> +
                                         (static_cast<long double>(current.residual) - phase[n]);
            residual[n] = static_cast<double>(mismatch / k);
            jacobian.row(n) = unit_axis(r, lev.geometry.q[n]).transpose();
        }
        const Eigen::FullPivLU<Mat3> lu(jacobian);
        if (!lu.isInvertible())
            return std::nullopt;
        const Vec3 delta = lu.solve(residual);
        r -= delta;
        if (delta.norm() <= 1e-18 + 1e-15 * r.norm())
            return r;
    }
    return std::nullopt;
}

std::optional<double> support_phase(const Levitator& lev) {
    const double finesse = lev.drive.finesse;
    const Vec3 up = up_direction(lev);
    double lift = 0.0;
    for (int n = 0; n < kCavities; ++n)
        lift += (2.0 * lev.drive.trap_power[n] / constants::c) * finesse * lev.geometry.nominal_axis(n).dot(up);
    const double weight = lev.weight();
    if (!(lift > weight))
        return std::nullopt;
    const double sine = std::sqrt(lift / weight - 1.0) / finesse;
    if (sine >= 1.0)
        return std::nullopt;
    return std::asin(sine);
}

TrapSite central_trap(const Levitator& lev, const EquilibriumOptions& options) {
    const auto phase = support_phase(lev);
    if (!phase)
        throw InfeasibleError("trapping beams cannot support the mirror");
    Branches branch{};
    std::array<double, kCavities> target{};
    const Vec3 origin = Vec3::Zero();
    for (int n = 0; n < kCavities; ++n) {
        const auto current = cavity_phase_at(origin, lev.geometry, n, lev.drive.wavenumber(n));
        branch[n] = current.branch + std::llround((current.residual - *phase) / constants::pi);
        target[n] = *phase;
    }
    const auto seed = solve_cavity_lengths(branch, target, origin, lev);
    if (!seed)
        throw NumericalError("resonance condition has no solution near the nominal pose");
    const auto result = find_equilibrium(MirrorPose{*seed}, lev, options);
    if (!result.converged)
        throw NumericalError("central trap: " + result.message);
    if (!result.site.stable) {
        const Eigen::SelfAdjointEigenSolver<Mat3> solver(result.site.stiffness, Eigen::EigenvaluesOnly);
        throw UnstableSiteError("central equilibrium is unstable", solver.eigenvalues()[0]);
    }
    return result.site;
}

Region default_scan_region(const Levitator& lev) {
    const Vec3 centre = central_trap(lev).position;
    Region region;
    region.lower = centre + Vec3(-30e-6, -30e-6, -30e-9);
    region.upper = centre + Vec3(30e-6, 30e-6, 10e-9);
    return region;
}

Mat3 principal_axes(const Mat3& stiffness, const Levitator& lev) {
    const Eigen::SelfAdjointEigenSolver<Mat3> solver(stiffness);
    const Vec3 lambda = solver.eigenvalues();
    Mat3 axes = solver.eigenvectors();
    const Mat3 frame = apparatus_frame(lev);
    const double scale = std::max(lambda.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    const double tolerance = 1e-6 * scale;

    int begin = 0;
    while (begin < 3) {
        int end = begin + 1;
        while (end < 3 && lambda[end] - lambda[end - 1] <= tolerance)
            ++end;
        if (end - begin > 1) {
            // Project frame axes into the degenerate eigenspace, largest overlap first.
            const Eigen::MatrixXd basis = axes.middleCols(begin, end - begin);
            std::array<int, 3> order{0, 1, 2};
            std::array<double, 3> overlap{};
            for (int j = 0; j < 3; ++j)
                overlap[j] = (basis.transpose() * frame.col(j)).norm();
            std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return overlap[a] > overlap[b]; });
            int filled = begin;
            for (int j : order) {
                if (filled == end)
                    break;
                Vec3 candidate = basis * (basis.transpose() * frame.col(j));
                for (int prior = begin; prior < filled; ++prior)
                    candidate -= axes.col(prior).dot(candidate) * axes.col(prior);
                if (candidate.norm() > 1e-6) {
                    axes.col(filled) = candidate.normalized();
                    ++filled;
                }
            }
        }
        begin = end;
    }
    for (int i = 0; i < 3; ++i) {
        Eigen::Index largest = 0;
        axes.col(i).cwiseAbs().maxCoeff(&largest);
        if (axes(largest, i) < 0.0)
            axes.col(i) = -axes.col(i);
    }
    return axes;
}

namespace {

struct AxisProfile {
    double step = 0.0;
    std::array<std::vector<double>, 2> rise;  // U(site + sign * j * step) - U(site), j >= 1
    std::array<double, 2> barrier{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
};

AxisProfile profile_axis(const Vec3& origin, const Vec3& axis, double u0, const Levitator& lev) {
    double projection = 0.0;
    for (int n = 0; n < kCavities; ++n)
        projection = std::max(projection, std::abs(lev.geometry.nominal_axis(n).dot(axis)));
    projection = std::max(projection, 1e-6);
    const double k = lev.drive.wavenumber();
    const double width = 1.0 / (lev.drive.finesse * k * projection);
    const double reach = constants::pi / (2.0 * k * projection);

    AxisProfile profile;
    profile.step = width / 20.0;
    const auto count = static_cast<std::size_t>(std::ceil(reach / profile.step));
    for (int side = 0; side < 2; ++side) {
        const double sign = side == 0 ? 1.0 : -1.0;
        auto& rise = profile.rise[side];
        rise.reserve(count);
        for (std::size_t j = 1; j <= count; ++j) {
            rise.push_back(potential(Vec3(origin + sign * static_cast<double>(j) * profile.step * axis), lev) - u0);
            const std::size_t size = rise.size();
            if (size >= 3 && rise[size - 2] > rise[size - 3] && rise[size - 1] < rise[size - 2]) {
                profile.barrier[side] = rise[size - 2];
                break;
            }
        }
    }
    return profile;
}

double crossing(const Vec3& origin, const Vec3& axis, double sign, const AxisProfile& profile,
                const std::vector<double>& rise, double u0, double level, const Levitator& lev) {
    for (std::size_t j = 0; j < rise.size(); ++j) {
        if (rise[j] < level)
            continue;
        double lo = static_cast<double>(j) * profile.step;
        double hi = static_cast<double>(j + 1) * profile.step;
        for (int i = 0; i < 60 && hi - lo > 1e-6 * profile.step; ++i) {
            const double mid = 0.5 * (lo + hi);
            (potential(Vec3(origin + sign * mid * axis), lev) - u0 < level ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

Vec3 trap_extents(const TrapSite& site, const Levitator& lev) {
    const Eigen::SelfAdjointEigenSolver<Mat3> solver(site.stiffness, Eigen::EigenvaluesOnly);
    if (!site.stable || solver.eigenvalues()[0] <= 0.0)
        throw UnstableSiteError("extents need a stable site", solver.eigenvalues()[0]);
    const Mat3 axes = principal_axes(site.stiffness, lev);
    const double u0 = potential(site.position, lev);

    std::array<AxisProfile, 3> profiles;
    double level = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
        profiles[i] = profile_axis(site.position, axes.col(i), u0, lev);
        level = std::min({level, profiles[i].barrier[0], profiles[i].barrier[1]});
    }
    if (!std::isfinite(level))
        throw NumericalError("no potential barrier found around the trap");

    Vec3 extents;
    for (int i = 0; i < 3; ++i) {
        const double plus = crossing(site.position, axes.col(i), 1.0, profiles[i], profiles[i].rise[0], u0, level, lev);
        const double minus = crossing(site.position, axes.col(i), -1.0, profiles[i], profiles[i].rise[1], u0, level, lev);
        if (std::isnan(plus) && std::isnan(minus))
            extents[i] = profiles[i].step * static_cast<double>(profiles[i].rise[0].size());
        else if (std::isnan(plus))
            extents[i] = minus;
        else if (std::isnan(minus))
            extents[i] = plus;
        else
            extents[i] = 0.5 * (plus + minus);
    }
    return extents;
}

SpacingStats lattice_spacing(const std::vector<TrapSite>& sites, const Region& region, const Levitator& lev) {
    SpacingStats stats;
    stats.sites = sites.size();
    if (sites.size() < 2)
        return stats;
    const Mat3 frame = apparatus_frame(lev);
    std::vector<Eigen::Vector2d> plane;
    plane.reserve(sites.size());
    for (const auto& site : sites)
        plane.emplace_back(frame.col(0).dot(site.position), frame.col(1).dot(site.position));

    std::vector<double> nearest(sites.size(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < sites.size(); ++i)
        for (std::size_t j = 0; j < sites.size(); ++j)
            if (i != j)
                nearest[i] = std::min(nearest[i], (plane[i] - plane[j]).norm());
    double sum = 0.0;
    stats.min_nearest = std::numeric_limits<double>::infinity();
    for (double d : nearest) {
        sum += d;
        stats.min_nearest = std::min(stats.min_nearest, d);
        stats.max_nearest = std::max(stats.max_nearest, d);
    }
    stats.mean_nearest = sum / static_cast<double>(sites.size());

    const Vec3 anchor = lev.geometry.centroid().cwiseMax(region.lower).cwiseMin(region.upper);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sites.size(); ++i) {
        const double d = (sites[i].position - anchor).norm();
        if (d < best) {
            best = d;
            stats.central_index = i;
        }
    }

    const auto& centre = plane[stats.central_index];
    const double shell = 1.2 * nearest[stats.central_index];
    std::vector<double> angles;
    for (std::size_t j = 0; j < sites.size(); ++j) {
        if (j == stats.central_index)
            continue;
        const Eigen::Vector2d offset = plane[j] - centre;
        if (offset.norm() <= shell)
            angles.push_back(std::atan2(offset.y(), offset.x()));
    }
    stats.central_neighbours = angles.size();
    std::sort(angles.begin(), angles.end());
    for (std::size_t j = 0; j < angles.size(); ++j) {
        double gap = (j + 1 < angles.size() ? angles[j + 1] : angles[0] + 2.0 * constants::pi) - angles[j];
        stats.max_angle_error = std::max(stats.max_angle_error, std::abs(gap - constants::pi / 3.0));
    }
    stats.triangular = stats.central_neighbours == 6 && stats.max_angle_error < 5.0 * constants::pi / 180.0 &&
                       stats.max_nearest < 1.2 * stats.min_nearest;
    return stats;
}

LatticeScan scan_lattice(const Region& region, const Levitator& lev, const ScanOptions& options) {
    LatticeScan scan;
    if (region.empty())
        return scan;
    const auto phase = support_phase(lev);
    if (!phase)
        return scan;

    const double horizontal = options.horizontal_step > 0.0 ? options.horizontal_step : lev.drive.wavelength / 8.0;
    const Vec3 extent = region.upper - region.lower;
    const auto points = [](double span, double step) {
        return static_cast<std::size_t>(std::floor(span / step + 1e-9)) + 1;
    };
    const std::size_t nx = points(extent.x(), horizontal);
    const std::size_t ny = points(extent.y(), horizontal);
    const std::size_t nz = points(extent.z(), options.vertical_step);
    const double total = static_cast<double>(nx) * static_cast<double>(ny) * static_cast<double>(nz);
    if (total > static_cast<double>(options.max_seeds))
        throw UsageError("scan region too large: " + std::to_string(static_cast<long long>(total)) +
                         " seeds exceed the cap of " + std::to_string(options.max_seeds));
    scan.seeds = static_cast<std::size_t>(total);
    const unsigned threads = worker_threads(options.threads);

    // Snap every seed onto the nearest resonance branch triple. k L_n splits as
    // k (R_b - R_t) + k |r - q_n|; the first part is reduced once in extended
    // precision, the second only needs double precision to pick a branch.
    const long double base = static_cast<long double>(lev.geometry.radius_bottom) - lev.geometry.radius_top;
    std::array<long long, kCavities> offset_branch{};
    std::array<double, kCavities> offset_phase{};
    std::array<double, kCavities> k_over_pi{};
    for (int n = 0; n < kCavities; ++n) {
        const double k = lev.drive.wavenumber(n);
        const auto fixed = cavity_phase(k, base, 0.0L);
        offset_branch[n] = fixed.branch;
        offset_phase[n] = (fixed.residual - *phase) / constants::pi;
        k_over_pi[n] = k / constants::pi;
    }
    std::vector<std::set<Branches>> per_row(nx);
    parallel_for(nx, threads, [&](std::size_t ix) {
        auto& found = per_row[ix];
        for (std::size_t iy = 0; iy < ny; ++iy) {
            const double x = region.lower.x() + static_cast<double>(ix) * horizontal;
            const double y = region.lower.y() + static_cast<double>(iy) * horizontal;
            std::array<double, kCavities> planar{};
            for (int n = 0; n < kCavities; ++n) {
                const Vec3& q = lev.geometry.q[n];
                planar[n] = (x - q.x()) * (x - q.x()) + (y - q.y()) * (y - q.y());
            }
            Branches last{};
            bool have_last = false;
            for (std::size_t iz = 0; iz < nz; ++iz) {
                const double z = region.lower.z() + static_cast<double>(iz) * options.vertical_step;
                Branches branch{};
                for (int n = 0; n < kCavities; ++n) {
                    const double dz = z - lev.geometry.q[n].z();
                    const double separation = std::sqrt(planar[n] + dz * dz);
                    branch[n] = offset_branch[n] + std::llround(offset_phase[n] + k_over_pi[n] * separation);
                }
                if (!have_last || branch != last) {
                    found.insert(branch);
                    last = branch;
                    have_last = true;
                }
            }
        }
    });
    std::set<Branches> triples;
    for (const auto& row : per_row)
        triples.insert(row.begin(), row.end());
    const std::vector<Branches> candidates(triples.begin(), triples.end());
    scan.candidates = candidates.size();

    const Vec3 centre = 0.5 * (region.lower + region.upper);
    const std::array<double, kCavities> target{*phase, *phase, *phase};
    const double margin = 1e-6;
    std::vector<std::optional<TrapSite>> solved(candidates.size());
    parallel_for(candidates.size(), threads, [&](std::size_t i) {
        const auto seed = solve_cavity_lengths(candidates[i], target, centre, lev);
        if (!seed || (seed->array() < region.lower.array() - margin).any() ||
            (seed->array() > region.upper.array() + margin).any())
            return;
        const auto result = find_equilibrium(MirrorPose{*seed}, lev, options.equilibrium);
        if (result.converged && result.site.stable && region.contains(result.site.position))
            solved[i] = result.site;
    });

    std::vector<TrapSite> sites;
    for (auto& site : solved)
        if (site)
            sites.push_back(*site);
    std::stable_sort(sites.begin(), sites.end(), [](const TrapSite& a, const TrapSite& b) {
        return std::lexicographical_compare(a.position.data(), a.position.data() + 3, b.position.data(),
                                            b.position.data() + 3);
    });
    for (const auto& site : sites) {
        const bool duplicate = std::any_of(scan.sites.begin(), scan.sites.end(), [&](const TrapSite& kept) {
            return (kept.position - site.position).norm() < options.dedup_radius;
        });
        if (!duplicate)
            scan.sites.push_back(site);
    }

    if (options.compute_extents) {
        parallel_for(scan.sites.size(), threads,
                     [&](std::size_t i) { scan.sites[i].extents = trap_extents(scan.sites[i], lev); });
    }
    scan.spacing = lattice_spacing(scan.sites, region, lev);
    return scan;
}

}  // namespace levitation
