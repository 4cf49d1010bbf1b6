#include "levitation/potential.hpp"

#include "levitation/errors.hpp"
#include "levitation/optics.hpp"

#include <cmath>

namespace levitation {

namespace {

struct CavityTerm {
    long double separation;
    CavityPhase phase;
};

CavityTerm cavity_term(const Vec3& r, const Levitator& lev, int n) {
    const auto& geometry = lev.geometry;
    const long double separation = centre_separation(r, geometry.q[n]);
    const long double base = static_cast<long double>(geometry.radius_bottom) - geometry.radius_top;
    return {separation, cavity_phase(lev.drive.wavenumber(n), base, separation)};
}

}  // namespace

double cavity_potential_slope(double input_power, double finesse, double phase) {
    const double s = std::sin(phase);
    const double c = std::cos(phase);
    return -(2.0 * input_power / constants::c) * finesse / (c * c + finesse * finesse * s * s);
}

double potential(const Vec3& r, const Levitator& lev) {
    const auto& drive = lev.drive;
    long double value = -static_cast<long double>(lev.mass) * lev.gravity.dot(r);
    for (int n = 0; n < kCavities; ++n) {
        if (drive.trap_power[n] == 0.0)
            continue;
        const auto term = cavity_term(r, lev, n);
        const long long reference = cavity_phase(drive.wavenumber(n), lev.geometry.nominal_length).branch;
        const double phi = term.phase.residual;
        // arctan(F tan phi) on the principal branch, finite at phi = pi/2.
        const double principal = std::atan2(drive.finesse * std::sin(phi), std::cos(phi));
        const long double unwrapped =
            static_cast<long double>(term.phase.branch - reference) * std::numbers::pi_v<long double> + principal;
        value -= (2.0L * drive.trap_power[n] / constants::c) * unwrapped / drive.wavenumber(n);
    }
    return static_cast<double>(value);
}

Vec3 gradient(const Vec3& r, const Levitator& lev) {
    Vec3 result = -lev.mass * lev.gravity;
    for (int n = 0; n < kCavities; ++n) {
        if (lev.drive.trap_power[n] == 0.0)
            continue;
        const auto term = cavity_term(r, lev, n);
        const Vec3 axis = (r - lev.geometry.q[n]) / static_cast<double>(term.separation);
        result += cavity_potential_slope(lev.drive.trap_power[n], lev.drive.finesse, term.phase.residual) * axis;
    }
    return result;
}

Mat3 apparatus_frame(const Levitator& lev) {
    const Vec3 up = -lev.gravity.normalized();
    Vec3 towards = lev.geometry.q[0] - lev.geometry.centroid();
    towards -= towards.dot(up) * up;
    if (towards.norm() < 1e-12 * (1.0 + lev.geometry.q[0].norm())) {
        towards = up.unitOrthogonal();
    }
    const Vec3 ex = towards.normalized();
    Mat3 frame;
    frame.col(0) = ex;
    frame.col(1) = up.cross(ex);
    frame.col(2) = up;
    return frame;
}

Mat3 hessian(const Vec3& r, const Levitator& lev, const HessianSteps& steps) {
    const Mat3 frame = apparatus_frame(lev);
    Mat3 local;
    for (int i = 0; i < 3; ++i) {
        const double h = i == 2 ? steps.vertical : steps.horizontal;
        const Vec3 direction = frame.col(i);
        const Vec3 up = r + h * direction;
        const Vec3 down = r - h * direction;
        const double actual = (up - down).dot(direction);
        if (!(h > 0.0) || std::abs(actual - 2.0 * h) > 1e-3 * h)
            throw NumericalError("Hessian step underflows relative to the coordinate magnitude");
        local.col(i) = frame.transpose() * (gradient(up, lev) - gradient(down, lev)) / actual;
    }
    local = 0.5 * (local + local.transpose()).eval();
    return frame * local * frame.transpose();
}

PotentialSample sample_potential(const Vec3& r, const Levitator& lev, const HessianSteps& steps) {
    PotentialSample sample;
    sample.value = potential(r, lev);
    sample.gradient = gradient(r, lev);
    sample.hessian = hessian(r, lev, steps);
    for (int n = 0; n < kCavities; ++n)
        sample.branch[n] = cavity_term(r, lev, n).phase.branch;
    return sample;
}

std::vector<GridSample> potential_grid(const Vec3& centre, const Vec3& u, const Vec3& v, double half_u,
                                       double half_v, int count, const Levitator& lev) {
    std::vector<GridSample> grid;
    if (count <= 0)
        return grid;
    grid.reserve(static_cast<std::size_t>(count) * count);
    const double denominator = count > 1 ? count - 1 : 1;
    for (int i = 0; i < count; ++i) {
        const double a = count > 1 ? -half_u + 2.0 * half_u * i / denominator : 0.0;
        for (int j = 0; j < count; ++j) {
            const double b = count > 1 ? -half_v + 2.0 * half_v * j / denominator : 0.0;
            const Vec3 position = centre + a * u + b * v;
            grid.push_back({position, potential(position, lev)});
        }
    }
    return grid;
}

}  // namespace levitation
