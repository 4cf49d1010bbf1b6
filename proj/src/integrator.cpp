#include "levitation/integrator.hpp"

#include "levitation/errors.hpp"

#include <boost/numeric/odeint/stepper/runge_kutta_fehlberg78.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace levitation {

namespace {

// Dormand & Prince (1980) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;

double error_norm(const StateVector& error, const StateVector& y0, const StateVector& y1,
                  const IntegratorOptions& options) {
    double sum = 0.0;
    const auto n = error.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double atol = options.absolute_tolerance.size() == n ? options.absolute_tolerance[i] : 0.0;
        const double scale = atol + options.relative_tolerance * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double ratio = scale > 0.0 ? error[i] / scale : (error[i] == 0.0 ? 0.0 : 1e300);
        sum += ratio * ratio;
    }
    return std::sqrt(sum / static_cast<double>(n));
}

class DormandPrince {
public:
    static constexpr double order = 5.0;

    DormandPrince(const Derivative& f, Eigen::Index n, IntegratorStats& stats)
        : f_(f), stats_(stats), k1_(n), k2_(n), k3_(n), k4_(n), k5_(n), k6_(n), k7_(n), stage_(n) {}

    void start(double t, const StateVector& y) {
        f_(t, y, k1_);
        ++stats_.evaluations;
    }

    const StateVector& slope() const { return k1_; }

    void attempt(double t, const StateVector& y, double h, StateVector& next, StateVector& error) {
        stage_ = y + h * (a21 * k1_);
        f_(t + c2 * h, stage_, k2_);
        stage_ = y + h * (a31 * k1_ + a32 * k2_);
        f_(t + c3 * h, stage_, k3_);
        stage_ = y + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
        f_(t + c4 * h, stage_, k4_);
        stage_ = y + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
        f_(t + c5 * h, stage_, k5_);
        stage_ = y + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
        f_(t + h, stage_, k6_);
        next = y + h * (b1 * k1_ + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
        f_(t + h, next, k7_);
        stats_.evaluations += 6;
        error = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);
    }

    void accept(double, const StateVector&) { k1_.swap(k7_); }

private:
    const Derivative& f_;
    IntegratorStats& stats_;
    StateVector k1_, k2_, k3_, k4_, k5_, k6_, k7_, stage_;
};

class Fehlberg {
public:
    static constexpr double order = 8.0;

    Fehlberg(const Derivative& f, Eigen::Index n, IntegratorStats& stats)
        : f_(f), stats_(stats), slope_(n), in_(n), out_(n), err_(n), derivative_(n), work_(n), rate_(n) {}

    void start(double t, const StateVector& y) {
        f_(t, y, slope_);
        ++stats_.evaluations;
    }

    const StateVector& slope() const { return slope_; }

    void attempt(double t, const StateVector& y, double h, StateVector& next, StateVector& error) {
        auto system = [this](const Buffer& x, Buffer& dxdt, double time) {
            work_ = Eigen::Map<const StateVector>(x.data(), static_cast<Eigen::Index>(x.size()));
            f_(time, work_, rate_);
            ++stats_.evaluations;
            Eigen::Map<StateVector>(dxdt.data(), static_cast<Eigen::Index>(dxdt.size())) = rate_;
        };
        Eigen::Map<StateVector>(in_.data(), y.size()) = y;
        Eigen::Map<StateVector>(derivative_.data(), y.size()) = slope_;
        stepper_.do_step(system, in_, derivative_, t, out_, h, err_);
        next = Eigen::Map<const StateVector>(out_.data(), y.size());
        error = Eigen::Map<const StateVector>(err_.data(), y.size());
    }

    void accept(double t, const StateVector& y) { start(t, y); }

private:
    using Buffer = std::vector<double>;
    const Derivative& f_;
    IntegratorStats& stats_;
    StateVector slope_;
    Buffer in_, out_, err_, derivative_;
    StateVector work_, rate_;
    boost::numeric::odeint::runge_kutta_fehlberg78<Buffer> stepper_;
};

double initial_step(const Derivative& f, const StateVector& y, const StateVector& slope, double t, double order,
                    const IntegratorOptions& options, IntegratorStats& stats) {
    // Hairer, Norsett & Wanner, starting step heuristic.
    const auto n = y.size();
    StateVector scale(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double atol = options.absolute_tolerance.size() == n ? options.absolute_tolerance[i] : 0.0;
        scale[i] = atol + options.relative_tolerance * std::abs(y[i]);
        if (scale[i] == 0.0)
            scale[i] = 1.0;
    }
    const double root = std::sqrt(static_cast<double>(n));
    const double d0 = (y.array() / scale.array()).matrix().norm() / root;
    const double d1 = (slope.array() / scale.array()).matrix().norm() / root;
    double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    const StateVector probe = y + h * slope;
    StateVector k2(n);
    f(t + h, probe, k2);
    ++stats.evaluations;
    const double d2 = ((k2 - slope).array() / scale.array()).matrix().norm() / root / h;
    const double h1 = std::max(d1, d2) <= 1e-15 ? std::max(1e-6, h * 1e-3)
                                                 : std::pow(0.01 / std::max(d1, d2), 1.0 / (order + 1.0));
    return std::min(100.0 * h, h1);
}

template <class Stepper>
IntegratorStats run(const Derivative& f, StateVector& y, double t0, std::span<const double> output_times,
                    const IntegratorOptions& options, const Observer& observe) {
    IntegratorStats stats;
    const auto n = y.size();
    Stepper stepper(f, n, stats);
    StateVector next(n), error(n);
    double t = t0;
    stepper.start(t, y);

    double h = options.initial_step > 0.0 ? options.initial_step
                                          : initial_step(f, y, stepper.slope(), t, Stepper::order, options, stats);
    h = std::min(h, options.max_step);
    const double exponent = -1.0 / Stepper::order;

    for (const double target : output_times) {
        if (target < t)
            throw NumericalError("output times must be ascending");
        while (t < target) {
            if (stats.steps + stats.rejected >= options.max_steps)
                throw NumericalError("integrator exceeded its step budget");
            const double remaining = target - t;
            const bool last = h >= remaining;
            const double step = last ? remaining : h;
            if (step <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t), std::abs(target)))
                throw NumericalError("step size underflow; reduce the initial displacement from the trap");

            stepper.attempt(t, y, step, next, error);
            const double err = error_norm(error, y, next, options);
            if (!std::isfinite(err) || !next.allFinite())
                throw NumericalError("non-finite state during integration");
            const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, exponent), 0.2, 5.0);
            if (err <= 1.0) {
                ++stats.steps;
                stats.max_error = std::max(stats.max_error, err);
                t = last ? target : t + step;
                y.swap(next);
                stepper.accept(t, y);
                // A clipped final step says nothing about the natural step size.
                if (!last || factor < 1.0)
                    h = std::min(step * factor, options.max_step);
            } else {
                ++stats.rejected;
                h = step * std::min(factor, 1.0);
            }
        }
        observe(t, y);
    }
    return stats;
}

}  // namespace

IntegratorStats integrate(const Derivative& f, StateVector& y, double t0, std::span<const double> output_times,
                          const IntegratorOptions& options, const Observer& observe) {
    switch (options.scheme) {
    case Scheme::fehlberg_78:
        return run<Fehlberg>(f, y, t0, output_times, options, observe);
    case Scheme::dormand_prince_54:
        break;
    }
    return run<DormandPrince>(f, y, t0, output_times, options, observe);
}

}  // namespace levitation
