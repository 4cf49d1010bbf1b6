#include "levitation/optics.hpp"

#include "levitation/errors.hpp"

#include <cmath>

namespace levitation {

namespace {

constexpr long double kPiL = 3.141592653589793238462643383279502884L;
// pi - kPiL
constexpr long double kPiTail = -5.0165576126683320235573270803306559e-20L;

// Neumaier-compensated sum.
struct Accumulator {
    long double sum = 0.0L;
    long double error = 0.0L;

    void add(long double x) {
        const long double t = sum + x;
        error += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
        sum = t;
    }
    long double value() const { return sum + error; }
};

// a * b as an unevaluated sum of the rounded product and its exact error.
void add_product(Accumulator& acc, long double a, long double b) {
    const long double p = a * b;
    acc.add(p);
    acc.add(std::fmal(a, b, -p));
}

CavityPhase reduce(const Accumulator& total, long double estimate) {
    long long branch = static_cast<long long>(std::ceil(estimate / kPiL - 0.5L));
    for (int pass = 0; pass < 2; ++pass) {
        Accumulator residual = total;
        add_product(residual, -static_cast<long double>(branch), kPiL);
        residual.add(-static_cast<long double>(branch) * kPiTail);
        const long double value = residual.value();
        if (value <= -0.5L * kPiL)
            --branch;
        else if (value > 0.5L * kPiL)
            ++branch;
        else
            return {branch, static_cast<double>(value)};
    }
    Accumulator residual = total;
    add_product(residual, -static_cast<long double>(branch), kPiL);
    residual.add(-static_cast<long double>(branch) * kPiTail);
    return {branch, static_cast<double>(residual.value())};
}

}  // namespace

CavityPhase cavity_phase(double wavenumber, long double length) {
    return cavity_phase(wavenumber, 0.0L, length);
}

CavityPhase cavity_phase(double wavenumber, long double base, long double separation) {
    const long double k = wavenumber;
    Accumulator total;
    add_product(total, k, base);
    add_product(total, k, separation);
    return reduce(total, k * (base + separation));
}

CavityPhase cavity_phase_at(const Vec3& r, const TripodGeometry& geometry, int n, double wavenumber) {
    const long double base = static_cast<long double>(geometry.radius_bottom) - geometry.radius_top;
    return cavity_phase(wavenumber, base, centre_separation(r, geometry.q[n]));
}

long double centre_separation(const Vec3& r, const Vec3& q) {
    const long double dx = static_cast<long double>(q.x()) - r.x();
    const long double dy = static_cast<long double>(q.y()) - r.y();
    const long double dz = static_cast<long double>(q.z()) - r.z();
    const long double distance = std::sqrt(dx * dx + dy * dy + dz * dz);
    if (!(distance > 0.0L))
        throw DegenerateGeometryError("mirror centre of curvature coincides with a lower mirror's");
    return distance;
}

std::array<double, kCavities> cavity_lengths(const MirrorPose& pose, const TripodGeometry& geometry) {
    std::array<double, kCavities> lengths{};
    const long double base = static_cast<long double>(geometry.radius_bottom) - geometry.radius_top;
    for (int n = 0; n < kCavities; ++n)
        lengths[n] = static_cast<double>(base + centre_separation(pose.r, geometry.q[n]));
    return lengths;
}

double circulating_power_at_phase(double input_power, double finesse, double phase) {
    const double s = std::sin(phase);
    return input_power * finesse / (1.0 + finesse * finesse * s * s);
}

double circulating_power(double input_power, double finesse, double wavenumber, double length) {
    return circulating_power_at_phase(input_power, finesse, cavity_phase(wavenumber, length).residual);
}

double linewidth(double finesse, double nominal_length) {
    return constants::pi * constants::c / (finesse * nominal_length);
}

double detuning_to_phase(double detuning, double length) { return detuning * length / constants::c; }

double phase_to_detuning(double phase, double length) { return phase * constants::c / length; }

double normalized_detuning(double phase, double finesse) { return phase * finesse / constants::pi; }

ForceResult radiation_force(const MirrorPose& pose, const Levitator& lev, bool include_gravity) {
    ForceResult result;
    const auto& geometry = lev.geometry;
    const long double base = static_cast<long double>(geometry.radius_bottom) - geometry.radius_top;
    for (int n = 0; n < kCavities; ++n) {
        auto& cavity = result.cavities[n];
        const long double separation = centre_separation(pose.r, geometry.q[n]);
        const long double length = base + separation;
        cavity.length = static_cast<double>(length);
        cavity.axis = (pose.r - geometry.q[n]) / static_cast<double>(separation);
        const auto phase = cavity_phase(lev.drive.wavenumber(n), base, separation);
        cavity.phase = phase.residual;
        cavity.branch = phase.branch;
        cavity.circulating_power =
            circulating_power_at_phase(lev.drive.trap_power[n], lev.drive.finesse, phase.residual);
        cavity.force = (2.0 * cavity.circulating_power / constants::c) * cavity.axis;
        result.total += cavity.force;
    }
    if (include_gravity)
        result.total += lev.mass * lev.gravity;
    return result;
}

}  // namespace levitation
