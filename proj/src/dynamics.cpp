#include "levitation/dynamics.hpp"

#include "levitation/errors.hpp"
#include "levitation/optics.hpp"
#include "levitation/potential.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace levitation {

namespace {

using Complex = std::complex<double>;

long double cavity_length(const Vec3& r, const TripodGeometry& geometry, int n) {
    return static_cast<long double>(geometry.radius_bottom) - geometry.radius_top +
           centre_separation(r, geometry.q[n]);
}

std::vector<double> output_times(double duration, double interval) {
    std::vector<double> times;
    if (duration <= 0.0)
        return times;
    const double step = interval > 0.0 ? interval : duration / 1000.0;
    const auto count = static_cast<std::size_t>(std::floor(duration / step + 1e-9));
    times.reserve(count + 2);
    for (std::size_t i = 0; i <= count; ++i)
        times.push_back(static_cast<double>(i) * step);
    if (duration - times.back() > 1e-9 * step)
        times.push_back(duration);
    return times;
}

double largest_frequency(const Mat3& stiffness, double mass) {
    const Eigen::SelfAdjointEigenSolver<Mat3> solver(stiffness, Eigen::EigenvaluesOnly);
    const double top = solver.eigenvalues().cwiseAbs().maxCoeff();
    return top > 0.0 ? std::sqrt(top / mass) : 1.0;
}

StateVector tolerance_vector(std::size_t size, double length, double frequency, double rtol) {
    StateVector atol(static_cast<Eigen::Index>(size));
    atol.setConstant(rtol * length);
    atol.segment<3>(3).setConstant(rtol * length * frequency);
    return atol;
}

}  // namespace

double photon_number(double circulating_power, double length, double laser_frequency) {
    return 2.0 * circulating_power * length / (constants::hbar * laser_frequency * constants::c);
}

double mechanical_energy(const Vec3& position, const Vec3& velocity, const Levitator& lev, const Vec3& reference) {
    return 0.5 * lev.mass * velocity.squaredNorm() + (potential(position, lev) - potential(reference, lev));
}

Trajectory simulate_quasistatic(const MechState& initial, const Levitator& lev, const QuasistaticOptions& options) {
    if (options.duration < 0.0)
        throw UsageError("duration must not be negative");
    Trajectory trajectory;
    const auto times = output_times(options.duration, options.output_interval);
    if (times.empty())
        return trajectory;

    const Vec3 origin = initial.position;
    const Mat3 stiffness = hessian(origin, lev);
    const double frequency = largest_frequency(stiffness, lev.mass);
    double length = options.length_scale;
    if (!(length > 0.0)) {
        const double stiff = frequency * frequency * lev.mass;
        length = std::max({gradient(origin, lev).norm() / stiff, initial.velocity.norm() / frequency, 1e-13});
    }

    StateVector y = StateVector::Zero(6);
    y.segment<3>(3) = initial.velocity;
    const Derivative rhs = [&](double, const StateVector& state, StateVector& rate) {
        const Vec3 r = origin + state.head<3>();
        const Vec3 v = state.segment<3>(3);
        rate.head<3>() = v;
        rate.segment<3>(3) = -gradient(r, lev) / lev.mass - options.extra_damping * v;
    };

    IntegratorOptions integrator;
    integrator.scheme = options.scheme;
    integrator.relative_tolerance = options.relative_tolerance;
    integrator.absolute_tolerance = tolerance_vector(6, length, frequency, options.relative_tolerance);
    integrator.max_step = options.dt_max;

    const double omega = lev.drive.laser_frequency();
    trajectory.samples.reserve(times.size());
    trajectory.stats = integrate(rhs, y, 0.0, times, integrator, [&](double t, const StateVector& state) {
        TrajectorySample sample;
        sample.time = initial.time + t;
        sample.position = origin + state.head<3>();
        sample.velocity = state.segment<3>(3);
        const auto forces = radiation_force(MirrorPose{sample.position}, lev, false);
        for (int n = 0; n < kCavities; ++n)
            sample.photons[n] = photon_number(forces.cavities[n].circulating_power, forces.cavities[n].length, omega);
        trajectory.samples.push_back(sample);
    });
    return trajectory;
}

DynamicModel DynamicModel::from_quasistatic(const Levitator& lev, const Vec3& reference) {
    DynamicModel model;
    model.lev = lev;
    model.reference = reference;
    const double kappa = linewidth(lev.drive.finesse, lev.geometry.nominal_length);
    for (int n = 0; n < kCavities; ++n) {
        model.reference_length[n] = cavity_length(reference, lev.geometry, n);
        if (lev.drive.trap_power[n] == 0.0)
            continue;
        const double length = static_cast<double>(model.reference_length[n]);
        const double k = lev.drive.wavenumber(n);
        const auto phase = cavity_phase_at(reference, lev.geometry, n, k);
        OpticalMode mode;
        mode.cavity = n;
        mode.detuning = phase_to_detuning(phase.residual, length);
        mode.decay = kappa;
        mode.pull = constants::c * k / length;
        const double power = circulating_power_at_phase(lev.drive.trap_power[n], lev.drive.finesse, phase.residual);
        const double photons = photon_number(power, length, constants::c * k);
        mode.drive = std::sqrt(photons * (mode.detuning * mode.detuning + 0.25 * kappa * kappa));
        mode.trapping = true;
        model.modes.push_back(mode);
    }
    return model;
}

void DynamicModel::add_cooling(double input_power, double detuning) {
    const double kappa = linewidth(lev.drive.finesse, lev.geometry.nominal_length);
    const double finesse = lev.drive.finesse;
    for (int n = 0; n < kCavities; ++n) {
        const double length = static_cast<double>(reference_length[n]);
        const double omega = lev.drive.laser_frequency();
        const double s = std::sin(detuning_to_phase(detuning, length));
        const double power = input_power * finesse / (1.0 + finesse * finesse * s * s);
        OpticalMode mode;
        mode.cavity = n;
        mode.detuning = detuning;
        mode.decay = kappa;
        mode.pull = omega / length;
        mode.drive = std::sqrt(photon_number(power, length, omega) * (detuning * detuning + 0.25 * kappa * kappa));
        mode.trapping = false;
        modes.push_back(mode);
    }
}

std::vector<Complex> DynamicModel::steady_state(const Vec3& r) const {
    std::vector<Complex> amplitudes;
    amplitudes.reserve(modes.size());
    for (const auto& mode : modes) {
        const double u = static_cast<double>(cavity_length(r, lev.geometry, mode.cavity) - reference_length[mode.cavity]);
        const double detuning = mode.detuning + mode.pull * u;
        amplitudes.push_back(mode.drive / Complex(0.5 * mode.decay, -detuning));
    }
    return amplitudes;
}

Vec3 DynamicModel::force(const Vec3& r, const std::vector<Complex>& amplitudes) const {
    Vec3 total = lev.mass * lev.gravity;
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const auto& q = lev.geometry.q[modes[i].cavity];
        const Vec3 axis = (r - q) / static_cast<double>(centre_separation(r, q));
        total += constants::hbar * modes[i].pull * std::norm(amplitudes[i]) * axis;
    }
    return total;
}

void DynamicModel::balance_weight() {
    const Vec3 up = -lev.gravity.normalized();
    const Vec3 lift = force(reference, steady_state(reference)) - lev.mass * lev.gravity;
    const double supplied = lift.dot(up);
    if (!(supplied > 0.0))
        throw InfeasibleError("optical modes exert no upward force");
    const double scale = std::sqrt(lev.weight() / supplied);
    for (auto& mode : modes)
        mode.drive *= scale;
}

Mat3 DynamicModel::adiabatic_stiffness(const Vec3& r, bool trapping_only, bool cooling_only) const {
    Mat3 stiffness = Mat3::Zero();
    for (const auto& mode : modes) {
        if ((trapping_only && !mode.trapping) || (cooling_only && mode.trapping))
            continue;
        const auto& q = lev.geometry.q[mode.cavity];
        const double separation = static_cast<double>(centre_separation(r, q));
        const Vec3 axis = (r - q) / separation;
        const double u = static_cast<double>(cavity_length(r, lev.geometry, mode.cavity) - reference_length[mode.cavity]);
        const double detuning = mode.detuning + mode.pull * u;
        const double denominator = detuning * detuning + 0.25 * mode.decay * mode.decay;
        const double photons = mode.drive * mode.drive / denominator;
        const double slope = -2.0 * mode.pull * detuning * photons / denominator;
        const double scale = constants::hbar * mode.pull;
        stiffness -= scale * (slope * axis * axis.transpose() +
                              photons * (Mat3::Identity() - axis * axis.transpose()) / separation);
    }
    return stiffness;
}

double DynamicModel::vertical_frequency(const Vec3& r) const {
    const Eigen::SelfAdjointEigenSolver<Mat3> solver(adiabatic_stiffness(r));
    const Vec3 up = -lev.gravity.normalized();
    int best = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(solver.eigenvectors().col(i).dot(up)) > std::abs(solver.eigenvectors().col(best).dot(up)))
            best = i;
    const double lambda = solver.eigenvalues()[best];
    if (!(solver.eigenvalues()[0] > 0.0))
        return 0.0;
    return std::sqrt(lambda / lev.mass);
}

DynamicModel cooled_model(const Levitator& lev, const Vec3& reference, double power_ratio) {
    const DynamicModel base = DynamicModel::from_quasistatic(lev, reference);
    const double trap_power = lev.drive.total_trap_power() / kCavities;
    const double free_omega = base.vertical_frequency(reference);
    if (!(free_omega > 0.0))
        throw UnstableSiteError("trapping modes give no restoring force at the reference pose", 0.0);
    auto build = [&](double omega) {
        DynamicModel model = base;
        model.add_cooling(power_ratio * trap_power, -omega);
        model.balance_weight();
        return model;
    };
    // Self-consistent omega_m is a root of omega(delta_2 = -w) - w on (0, free_omega].
    auto mismatch = [&](double omega) { return build(omega).vertical_frequency(reference) - omega; };
    double hi = free_omega;
    if (mismatch(hi) >= 0.0)
        return build(hi);
    double lo = 1e-6 * free_omega;
    if (!(mismatch(lo) > 0.0))
        throw InfeasibleError("cooling modes overwhelm the optical spring");
    for (int iteration = 0; iteration < 200 && hi - lo > 1e-13 * hi; ++iteration) {
        const double mid = 0.5 * (lo + hi);
        (mismatch(mid) > 0.0 ? lo : hi) = mid;
    }
    DynamicModel model = build(lo);
    if (!(model.vertical_frequency(reference) > 0.0))
        throw InfeasibleError("cooling modes overwhelm the optical spring");
    return model;
}

Trajectory simulate_dynamic(const MechState& initial, const FieldState& fields, const DynamicModel& model,
                            const DynamicOptions& options) {
    if (options.duration < 0.0)
        throw UsageError("duration must not be negative");
    if (fields.amplitudes.size() != model.modes.size())
        throw UsageError("one field amplitude per optical mode is required");
    Trajectory trajectory;
    const auto times = output_times(options.duration, options.output_interval);
    if (times.empty())
        return trajectory;

    const auto& lev = model.lev;
    const Vec3 origin = initial.position;
    const std::size_t modes = model.modes.size();
    const double frequency = std::max(model.vertical_frequency(model.reference), 1.0);
    double length = options.length_scale;
    if (!(length > 0.0))
        length = std::max({(origin - model.reference).norm(), initial.velocity.norm() / frequency, 1e-13});

    StateVector y = StateVector::Zero(static_cast<Eigen::Index>(6 + 2 * modes));
    y.segment<3>(3) = options.clamped ? Vec3::Zero() : initial.velocity;
    for (std::size_t i = 0; i < modes; ++i) {
        y[6 + 2 * i] = fields.amplitudes[i].real();
        y[7 + 2 * i] = fields.amplitudes[i].imag();
    }

    const Derivative rhs = [&](double, const StateVector& state, StateVector& rate) {
        const Vec3 r = origin + state.head<3>();
        std::array<long double, kCavities> current{};
        std::array<Vec3, kCavities> axes;
        for (int n = 0; n < kCavities; ++n) {
            const long double separation = centre_separation(r, lev.geometry.q[n]);
            current[n] = static_cast<long double>(lev.geometry.radius_bottom) - lev.geometry.radius_top + separation;
            axes[n] = (r - lev.geometry.q[n]) / static_cast<double>(separation);
        }
        Vec3 total = lev.mass * lev.gravity;
        for (std::size_t i = 0; i < modes; ++i) {
            const auto& mode = model.modes[i];
            const Complex a(state[6 + 2 * i], state[7 + 2 * i]);
            const double u = static_cast<double>(current[mode.cavity] - model.reference_length[mode.cavity]);
            const Complex da = Complex(-0.5 * mode.decay, mode.detuning + mode.pull * u) * a + mode.drive;
            rate[6 + 2 * i] = da.real();
            rate[7 + 2 * i] = da.imag();
            total += constants::hbar * mode.pull * std::norm(a) * axes[mode.cavity];
        }
        if (options.clamped) {
            rate.head<6>().setZero();
        } else {
            rate.head<3>() = state.segment<3>(3);
            rate.segment<3>(3) = total / lev.mass;
        }
    };

    IntegratorOptions integrator;
    integrator.scheme = options.scheme;
    integrator.relative_tolerance = options.relative_tolerance;
    integrator.absolute_tolerance = tolerance_vector(y.size(), length, frequency, options.relative_tolerance);
    const auto steady = model.steady_state(model.reference);
    for (std::size_t i = 0; i < modes; ++i) {
        const double scale = options.relative_tolerance * std::max(std::abs(steady[i]), 1.0);
        integrator.absolute_tolerance[6 + 2 * i] = scale;
        integrator.absolute_tolerance[7 + 2 * i] = scale;
    }
    integrator.max_step = options.dt_max;

    trajectory.samples.reserve(times.size());
    trajectory.stats = integrate(rhs, y, 0.0, times, integrator, [&](double t, const StateVector& state) {
        TrajectorySample sample;
        sample.time = initial.time + t;
        sample.position = origin + state.head<3>();
        sample.velocity = state.segment<3>(3);
        for (std::size_t i = 0; i < modes; ++i)
            if (model.modes[i].trapping)
                sample.photons[model.modes[i].cavity] =
                    state[6 + 2 * i] * state[6 + 2 * i] + state[7 + 2 * i] * state[7 + 2 * i];
        trajectory.samples.push_back(sample);
    });
    return trajectory;
}

std::vector<double> upward_crossings(const Trajectory& trajectory, const Vec3& axis, double level) {
    std::vector<double> crossings;
    const auto& samples = trajectory.samples;
    for (std::size_t i = 1; i < samples.size(); ++i) {
        const double before = samples[i - 1].position.dot(axis) - level;
        const double after = samples[i].position.dot(axis) - level;
        if (before < 0.0 && after >= 0.0) {
            const double fraction = before / (before - after);
            crossings.push_back(samples[i - 1].time + fraction * (samples[i].time - samples[i - 1].time));
        }
    }
    return crossings;
}

double crossing_frequency(const Trajectory& trajectory, const Vec3& axis, double level) {
    const auto crossings = upward_crossings(trajectory, axis, level);
    if (crossings.size() < 2)
        return 0.0;
    return 2.0 * constants::pi * static_cast<double>(crossings.size() - 1) / (crossings.back() - crossings.front());
}

EnvelopeFit fit_envelope(const Trajectory& trajectory, const Vec3& axis, double level, double skip_periods,
                         std::size_t min_periods) {
    const auto crossings = upward_crossings(trajectory, axis, level);
    if (crossings.size() < 2)
        throw NumericalError("no oscillation to fit");
    const double period = (crossings.back() - crossings.front()) / static_cast<double>(crossings.size() - 1);
    const double start = trajectory.samples.front().time + skip_periods * period;

    // Positive lobes: the largest sample between successive upward crossings.
    const auto& samples = trajectory.samples;
    std::vector<double> times;
    std::vector<double> amplitudes;
    std::size_t i = 0;
    for (std::size_t c = 0; c + 1 < crossings.size(); ++c) {
        while (i < samples.size() && samples[i].time < crossings[c])
            ++i;
        std::size_t best = i;
        for (std::size_t j = i; j < samples.size() && samples[j].time < crossings[c + 1]; ++j)
            if (samples[j].position.dot(axis) > samples[best].position.dot(axis))
                best = j;
        if (best == 0 || best + 1 >= samples.size())
            continue;
        const double y0 = samples[best - 1].position.dot(axis) - level;
        const double y1 = samples[best].position.dot(axis) - level;
        const double y2 = samples[best + 1].position.dot(axis) - level;
        const double curvature = y0 - 2.0 * y1 + y2;
        double peak = y1;
        double shift = 0.0;
        if (curvature < 0.0) {
            peak = y1 - (y0 - y2) * (y0 - y2) / (8.0 * curvature);
            shift = 0.5 * (y0 - y2) / curvature;
        }
        const double h = samples[best].time - samples[best - 1].time;
        const double t = samples[best].time + shift * h;
        if (t < start || !(peak > 0.0))
            continue;
        times.push_back(t);
        amplitudes.push_back(peak);
    }
    if (times.size() < std::max<std::size_t>(min_periods, 3))
        throw NumericalError("too few periods after the transient for an envelope fit");

    double mean_t = 0.0;
    double mean_y = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        mean_t += times[k];
        mean_y += std::log(amplitudes[k]);
    }
    mean_t /= static_cast<double>(times.size());
    mean_y /= static_cast<double>(times.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        sxy += (times[k] - mean_t) * (std::log(amplitudes[k]) - mean_y);
        sxx += (times[k] - mean_t) * (times[k] - mean_t);
    }
    EnvelopeFit fit;
    fit.rate = sxy / sxx;
    fit.peaks = times.size();
    fit.first_amplitude = amplitudes.front();
    fit.last_amplitude = amplitudes.back();
    fit.monotonic = true;
    for (std::size_t k = 1; k < amplitudes.size(); ++k) {
        const double change = amplitudes[k] - amplitudes[k - 1];
        if ((fit.rate > 0.0 && !(change > 0.0)) || (fit.rate < 0.0 && !(change < 0.0)))
            fit.monotonic = false;
    }
    return fit;
}

}  // namespace levitation
