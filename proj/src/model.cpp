#include "levitation/model.hpp"

#include "levitation/errors.hpp"

#include <cmath>

namespace levitation {

TripodGeometry TripodGeometry::symmetric(double radius_bottom, double radius_top,
                                         double nominal_length, double tilt) {
    const double offset = nominal_length - (radius_bottom - radius_top);
    if (!(offset > 0.0))
        throw DegenerateGeometryError("nominal length leaves no room between centres of curvature");

    TripodGeometry geometry;
    geometry.radius_bottom = radius_bottom;
    geometry.radius_top = radius_top;
    geometry.nominal_length = nominal_length;
    geometry.tilt = tilt;
    for (int n = 0; n < kCavities; ++n) {
        const double azimuth = 2.0 * constants::pi * n / kCavities;
        const Vec3 axis(std::sin(tilt) * std::cos(azimuth), std::sin(tilt) * std::sin(azimuth),
                        std::cos(tilt));
        geometry.q[n] = -offset * axis;
    }
    return geometry;
}

Vec3 TripodGeometry::nominal_axis(int n) const { return (-q[n]).normalized(); }

double Environment::gas_speed() const {
    return std::sqrt(2.0 * constants::kB * temperature / gas_mass);
}

double Environment::mean_free_path() const {
    if (pressure <= 0.0)
        return INFINITY;
    return constants::kB * temperature /
           (std::sqrt(2.0) * constants::pi * molecule_diameter * molecule_diameter * pressure);
}

Levitator Levitator::from_config(const SimulationConfig& config) {
    Levitator lev;
    lev.geometry = config.geometry;
    lev.drive = config.drive;
    lev.mass = config.mirror.mass;
    return lev;
}

}  // namespace levitation
