#pragma once

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <span>

namespace levitation {

using StateVector = Eigen::VectorXd;

enum class Scheme {
    dormand_prince_54,
    fehlberg_78,
};

struct IntegratorOptions {
    Scheme scheme = Scheme::dormand_prince_54;
    double relative_tolerance = 1e-10;
    StateVector absolute_tolerance;  // per component; empty means 0
    double max_step = std::numeric_limits<double>::infinity();
    double initial_step = 0.0;       // 0: automatic
    long max_steps = 100'000'000;
};

struct IntegratorStats {
    long steps = 0;
    long rejected = 0;
    long evaluations = 0;
    double max_error = 0.0;  // largest accepted scaled error estimate
};

using Derivative = std::function<void(double t, const StateVector& y, StateVector& dydt)>;
using Observer = std::function<void(double t, const StateVector& y)>;

/// Adaptive embedded Runge-Kutta integration with an RMS error norm over
/// atol_i + rtol |y_i|. Steps are clipped to land on every entry of
/// `output_times` (ascending, >= t0), where `observe` is called. On return `y`
/// holds the state at the last output time. Throws NumericalError on step-size
/// underflow or when max_steps is exceeded.
IntegratorStats integrate(const Derivative& f, StateVector& y, double t0, std::span<const double> output_times,
                          const IntegratorOptions& options, const Observer& observe);

}  // namespace levitation
