#include <doctest.h>

#include "levitation/config.hpp"
#include "levitation/errors.hpp"
#include "levitation/modes.hpp"
#include "levitation/traps.hpp"

#include <Eigen/Geometry>

#include <cmath>

using namespace levitation;

namespace {

Levitator nominal() { return Levitator::from_config(default_config()); }

}  // namespace

TEST_SUITE("modes") {

TEST_CASE("isotropic spring") {
    const Levitator lev = nominal();
    const double k = 12.5;
    const ModeSet modes = mode_frequencies(Mat3::Identity() * k, 3e-7, lev);
    for (double w : modes.frequencies)
        CHECK(w == doctest::Approx(std::sqrt(k / 3e-7)).epsilon(1e-15));
}

TEST_CASE("frequency scaling with stiffness and mass") {
    const Levitator lev = nominal();
    const TrapSite site = central_trap(lev);
    const ModeSet base = mode_frequencies(site, lev.mass, lev);
    const ModeSet stiffer = mode_frequencies(4.0 * site.stiffness, lev.mass, lev);
    const ModeSet heavier = mode_frequencies(site, 4.0 * lev.mass, lev);
    for (int i = 0; i < 3; ++i) {
        CHECK(stiffer.frequencies[i] == 2.0 * base.frequencies[i]);
        CHECK(heavier.frequencies[i] == doctest::Approx(0.5 * base.frequencies[i]).epsilon(1e-9));
    }
    const int v = vertical_mode(base, lev);
    CHECK(std::abs(base.axes.col(v).z()) > 0.99);
}

TEST_CASE("unstable stiffness and bad mass are rejected") {
    const Levitator lev = nominal();
    const Mat3 saddle = Vec3(1.0, -2.0, 3.0).asDiagonal();
    try {
        mode_frequencies(saddle, 1.0, lev);
        FAIL("expected UnstableSiteError");
    } catch (const UnstableSiteError& e) {
        CHECK(e.eigenvalue() == doctest::Approx(-2.0));
    }
    CHECK_THROWS_AS(mode_frequencies(Mat3::Identity(), 0.0, lev), UsageError);
}

TEST_CASE("frequencies are invariant under a rigid rotation of the apparatus") {
    const Levitator lev = nominal();
    const Eigen::AngleAxisd turn(0.3, Vec3(1.0, 2.0, 0.5).normalized());
    Levitator rotated = lev;
    for (auto& q : rotated.geometry.q)
        q = turn * q;
    rotated.gravity = turn * lev.gravity;

    const ModeSet a = mode_frequencies(central_trap(lev), lev.mass, lev);
    const ModeSet b = mode_frequencies(central_trap(rotated), rotated.mass, rotated);
    for (int i = 0; i < 3; ++i)
        CHECK(b.frequencies[i] == doctest::Approx(a.frequencies[i]).epsilon(1e-9));
    CHECK(b.frequencies[vertical_mode(b, rotated)] == doctest::Approx(a.frequencies[vertical_mode(a, lev)]).epsilon(1e-9));
}

TEST_CASE("support-balanced sweep") {
    const std::vector<double> finesses{1000.0, 4000.0};
    const std::vector<double> detunings{0.1, 0.3, 0.5, 0.7, 0.9};
    const auto rows = frequency_vs_detuning(finesses, detunings, nominal());
    REQUIRE(rows.size() == 10);
    for (const SweepRow& row : rows) {
        CHECK(row.feasible);
        CHECK(row.omega_vertical > row.omega_h2);
        CHECK(row.omega_h2 >= row.omega_h1);
        CHECK(row.omega_h1 > 0.0);
    }
    // With support power P_in ~ 1/F the stiffness grows like F.
    for (std::size_t d = 0; d < detunings.size(); ++d)
        CHECK(rows[5 + d].omega_vertical / rows[d].omega_vertical == doctest::Approx(2.0).epsilon(0.05));
    CHECK(rows[0].finesse == 1000.0);
    CHECK(rows[5].detuning == 0.1);
}

TEST_CASE("infeasible rows are flagged without stopping the sweep") {
    SweepOptions options;
    options.support.max_power = 0.5;
    const auto rows = frequency_vs_detuning({1000.0, 10000.0}, {0.5}, nominal(), options);
    REQUIRE(rows.size() == 2);
    CHECK_FALSE(rows[0].feasible);
    CHECK(rows[1].feasible);
}

}

TEST_SUITE("modes_nominal_power") {

TEST_CASE("finesse 10000 with 3 W total gives a vertical frequency between 100 kHz and 1 MHz") {
    Levitator lev = nominal();
    lev.drive.finesse = 10000.0;
    REQUIRE(lev.drive.total_trap_power() == doctest::Approx(3.0));
    const TrapSite site = central_trap(lev);
    const ModeSet modes = mode_frequencies(site, lev.mass, lev);
    const double hz = modes.frequencies[vertical_mode(modes, lev)] / (2.0 * constants::pi);
    INFO("vertical frequency " << hz << " Hz at detuning " << site.detunings[0] << " kappa");
    CHECK(hz >= 1e5);
    CHECK(hz <= 1e6);
}

}
