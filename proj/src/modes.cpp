#include "levitation/modes.hpp"

#include "levitation/errors.hpp"
#include "levitation/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace levitation {

ModeSet mode_frequencies(const Mat3& stiffness, double mass, const Levitator& lev) {
    if (!(mass > 0.0))
        throw UsageError("mass must be positive");
    ModeSet modes;
    modes.stiffness = 0.5 * (stiffness + stiffness.transpose());
    const Eigen::SelfAdjointEigenSolver<Mat3> solver(modes.stiffness, Eigen::EigenvaluesOnly);
    const Vec3 lambda = solver.eigenvalues();
    if (!(lambda[0] > 0.0))
        throw UnstableSiteError("stiffness has a non-positive eigenvalue", lambda[0]);
    for (int i = 0; i < 3; ++i)
        modes.frequencies[i] = std::sqrt(lambda[i] / mass);
    modes.axes = principal_axes(modes.stiffness, lev);
    return modes;
}

ModeSet mode_frequencies(const TrapSite& site, double mass, const Levitator& lev) {
    return mode_frequencies(site.stiffness, mass, lev);
}

int vertical_mode(const ModeSet& modes, const Levitator& lev) {
    const Vec3 up = -lev.gravity.normalized();
    int best = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(modes.axes.col(i).dot(up)) > std::abs(modes.axes.col(best).dot(up)))
            best = i;
    return best;
}

Levitator supported_levitator(const Levitator& lev, double finesse, double detuning, const SupportOptions& support) {
    Levitator tuned = lev;
    tuned.drive.finesse = finesse;
    const double power = solve_support_power(detuning, tuned, support);
    return with_total_power(tuned, power);
}

std::vector<SweepRow> frequency_vs_detuning(const std::vector<double>& finesses, const std::vector<double>& detunings,
                                            const Levitator& lev, const SweepOptions& options) {
    std::vector<SweepRow> rows(finesses.size() * detunings.size());
    parallel_for(rows.size(), worker_threads(options.threads), [&](std::size_t index) {
        SweepRow& row = rows[index];
        row.finesse = finesses[index / detunings.size()];
        row.detuning = detunings[index % detunings.size()];
        try {
            const Levitator tuned = supported_levitator(lev, row.finesse, row.detuning, options.support);
            row.input_power_total = tuned.drive.total_trap_power();
            const TrapSite site = central_trap(tuned);
            const ModeSet modes = mode_frequencies(site, tuned.mass, tuned);
            const int vertical = vertical_mode(modes, tuned);
            row.omega_vertical = modes.frequencies[vertical];
            std::array<double, 2> horizontal{};
            int filled = 0;
            for (int i = 0; i < 3; ++i)
                if (i != vertical)
                    horizontal[filled++] = modes.frequencies[i];
            row.omega_h1 = horizontal[0];
            row.omega_h2 = horizontal[1];
            row.feasible = true;
        } catch (const NumericalError&) {
            row.feasible = false;
        } catch (const UsageError&) {
            row.feasible = false;
        }
    });
    return rows;
}

}  // namespace levitation
