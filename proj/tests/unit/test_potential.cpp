#include <doctest.h>

#include "levitation/config.hpp"
#include "levitation/errors.hpp"
#include "levitation/optics.hpp"
#include "levitation/potential.hpp"
#include "levitation/traps.hpp"

#include "../support/oracles.hpp"

#include <cmath>

using namespace levitation;
using levitation::testing::PoseSampler;

namespace {

Levitator nominal() { return Levitator::from_config(default_config()); }

Levitator single_beam(int n, double power) {
    Levitator lev = nominal();
    lev.drive.trap_power = {0.0, 0.0, 0.0};
    lev.drive.trap_power[n] = power;
    lev.gravity = Vec3::Zero();
    return lev;
}

}  // namespace

TEST_SUITE("potential") {

TEST_CASE("dark cavities leave pure gravity") {
    Levitator lev = nominal();
    lev.drive.trap_power = {0.0, 0.0, 0.0};
    PoseSampler sampler(Vec3::Zero(), Vec3(1e-5, 1e-5, 1e-6), 21);
    for (int i = 0; i < 10; ++i) {
        const Vec3 r = sampler.next();
        CHECK(potential(r, lev) == doctest::Approx(lev.mass * constants::g0 * r.z()).epsilon(1e-14));
        CHECK((gradient(r, lev) - Vec3(0.0, 0.0, lev.mass * constants::g0)).norm() <= 1e-14 * lev.weight());
        CHECK(hessian(r, lev).norm() == 0.0);
    }
}

TEST_CASE("finite-difference slope along a cavity matches radiation pressure") {
    for (double finesse : {100.0, 1000.0, 10000.0}) {
        Levitator lev = single_beam(1, 1.0);
        lev.drive.finesse = finesse;
        const Vec3 axis = lev.geometry.nominal_axis(1);
        PoseSampler sampler(Vec3::Zero(), Vec3(1e-6, 1e-6, 1e-6), 22);
        for (int i = 0; i < 20; ++i) {
            const Vec3 r = sampler.next();
            const double h = 1e-12;
            const double slope = (potential(r + h * axis, lev) - potential(r - h * axis, lev)) / (2.0 * h);
            MirrorPose pose;
            pose.r = r;
            const double pushed = 2.0 * radiation_force(pose, lev, false).cavities[1].circulating_power / constants::c;
            // Along the nominal axis the actual axis differs by < 1e-5 rad.
            CHECK(std::abs(-slope - pushed) <= (2.0 / (finesse * finesse) + 1e-6) * pushed);
        }
    }
}

TEST_CASE("per-cavity slope against the circulating power") {
    for (double finesse : {100.0, 1000.0, 10000.0}) {
        for (double phi : {-1.2, -0.3, -1e-3, 0.0, 2e-4, 0.05, 0.9, constants::pi / 2}) {
            const double slope = cavity_potential_slope(1.0, finesse, phi);
            const double pushed = 2.0 * circulating_power_at_phase(1.0, finesse, phi) / constants::c;
            CHECK(slope < 0.0);
            CHECK(std::abs(-slope - pushed) <= 2.0 / (finesse * finesse) * pushed);
        }
    }
}

TEST_CASE("U is continuous across branch points") {
    Levitator lev = single_beam(0, 1.0);
    lev.drive.finesse = 100.0;
    const Vec3 axis = lev.geometry.nominal_axis(0);
    const double lambda = lev.drive.wavelength;
    const int steps = 2000;
    const double step = 1.5 * lambda / steps;  // three branch crossings
    const double bound = 2.0 * lev.drive.trap_power[0] * lev.drive.finesse / constants::c * step;
    double previous = potential(Vec3::Zero(), lev);
    for (int i = 1; i <= steps; ++i) {
        const double value = potential((i * step) * axis, lev);
        CHECK(std::abs(value - previous) <= 1.01 * bound);
        CHECK(value < previous);  // the optical term falls as the cavity lengthens
        previous = value;
    }
}

TEST_CASE("Euler angles alpha and gamma do not enter U") {
    const Levitator lev = nominal();
    MirrorPose pose;
    pose.r = Vec3(3e-6, -2e-6, 4e-8);
    const double reference = potential(pose, lev);
    pose.alpha = 0.7;
    pose.gamma = -2.1;
    CHECK(potential(pose, lev) == reference);
    CHECK(gradient(pose, lev) == gradient(pose.r, lev));
}

TEST_CASE("analytic gradient matches central differences of U") {
    for (double finesse : {100.0, 1000.0, 10000.0}) {
        Levitator lev = nominal();
        lev.drive.finesse = finesse;
        PoseSampler sampler(Vec3(0.0, 0.0, 7e-8), Vec3(3e-5, 3e-5, 2e-8), 23);
        for (int i = 0; i < 25; ++i) {
            const Vec3 r = sampler.next();
            const Vec3 analytic = gradient(r, lev);
            CHECK((analytic - levitation::testing::fd_gradient(r, lev, 1e-12, 2e-10 / finesse)).norm() <= 1e-6 * analytic.norm());
        }
    }
}

TEST_CASE("Hessian matches second differences of U and is symmetric") {
    const Levitator lev = nominal();
    const TrapSite site = central_trap(lev);
    const Mat3 analytic = hessian(site.position, lev);
    const Mat3 oracle = levitation::testing::fd_hessian_of_potential(site.position, lev, 1e-12);
    CHECK((analytic - oracle).norm() <= 1e-3 * analytic.norm());
    CHECK((analytic - analytic.transpose()).norm() <= 1e-12 * analytic.norm());
    Eigen::SelfAdjointEigenSolver<Mat3> eigen(analytic);
    CHECK(eigen.eigenvalues().minCoeff() > 0.0);

    // Away from the trap the vertical curvature is small, so the stencil needs a longer vertical step.
    PoseSampler sampler(site.position, Vec3(1e-5, 1e-5, 1e-8), 24);
    for (int i = 0; i < 10; ++i) {
        const Vec3 r = sampler.next();
        const Mat3 h = hessian(r, lev);
        const Mat3 fd = levitation::testing::fd_hessian_of_potential(r, lev, Vec3(3e-10, 3e-10, 3e-11));
        CHECK((h - fd).norm() <= 1e-3 * h.norm());
    }
}

TEST_CASE("Hessian step underflow is reported") {
    const Levitator lev = nominal();
    HessianSteps steps;
    steps.horizontal = 1e-30;
    CHECK_THROWS_AS(hessian(Vec3(1e-5, 0.0, 0.0), lev, steps), NumericalError);
}

TEST_CASE("apparatus frame is orthonormal with the vertical against gravity") {
    Levitator lev = nominal();
    lev.gravity = Vec3(0.3, -0.2, -9.7);
    const Mat3 frame = apparatus_frame(lev);
    CHECK((frame.transpose() * frame - Mat3::Identity()).norm() < 1e-14);
    CHECK((frame.col(2) + lev.gravity.normalized()).norm() < 1e-15);
    CHECK(frame.determinant() == doctest::Approx(1.0));
}

TEST_CASE("potential grid samples the requested plane") {
    const Levitator lev = nominal();
    const Vec3 centre(0.0, 0.0, 7e-8);
    const auto grid = potential_grid(centre, Vec3::UnitX(), Vec3::UnitY(), 1e-6, 2e-6, 5, lev);
    REQUIRE(grid.size() == 25);
    CHECK(grid[12].position == centre);
    CHECK(grid[12].value == potential(centre, lev));
    CHECK(grid.front().position.x() == doctest::Approx(-1e-6));
    CHECK(grid.back().position.y() == doctest::Approx(2e-6));
    CHECK(potential_grid(centre, Vec3::UnitX(), Vec3::UnitY(), 1e-6, 1e-6, 0, lev).empty());
}

}
