#pragma once

#include "levitation/model.hpp"
#include "levitation/traps.hpp"

#include <array>
#include <vector>

namespace levitation {

struct ModeSet {
    Mat3 stiffness = Mat3::Zero();
    std::array<double, 3> frequencies{};  // rad/s, ascending
    Mat3 axes = Mat3::Identity();         // column i belongs to frequencies[i]
};

/// omega_i = sqrt(lambda_i / m) of the stiffness tensor. Throws
/// UnstableSiteError on a non-positive eigenvalue.
ModeSet mode_frequencies(const Mat3& stiffness, double mass, const Levitator& lev);
ModeSet mode_frequencies(const TrapSite& site, double mass, const Levitator& lev);

/// Index of the mode whose axis is most nearly vertical.
int vertical_mode(const ModeSet& modes, const Levitator& lev);

struct SweepRow {
    double finesse = 0.0;
    double detuning = 0.0;  // delta / kappa
    bool feasible = false;
    double omega_vertical = 0.0;
    double omega_h1 = 0.0;  // lower horizontal
    double omega_h2 = 0.0;
    double input_power_total = 0.0;
};

struct SweepOptions {
    SupportOptions support{};
    unsigned threads = 0;
};

/// Mode frequencies of the support-balanced central trap for every
/// (finesse, detuning) pair, finesse-major. Rows whose support solve or trap
/// search fails are marked infeasible.
std::vector<SweepRow> frequency_vs_detuning(const std::vector<double>& finesses, const std::vector<double>& detunings,
                                            const Levitator& lev, const SweepOptions& options = {});

/// Copy of `lev` at the given finesse carrying the support power for
/// `detuning` linewidths, so that the symmetric pose is the trap.
Levitator supported_levitator(const Levitator& lev, double finesse, double detuning,
                              const SupportOptions& support = {});

}  // namespace levitation
