#pragma once

#include <limits>

namespace awbench {

/// First-order servo with amplitude and rate limits (degrees, seconds).
struct ActuatorParams {
    double tau = 0.1;
    double u_max = 20.0;
    double rate_max = 30.0;
    /// Ideal servo: u_ac follows the command directly (still clamped). Ignores tau.
    bool lag_free = false;

    void validate() const;

    /// Infinite limits, same lag. Reduces the step to the plain Euler lag.
    static ActuatorParams unbounded(double tau = 0.1) {
        constexpr double inf = std::numeric_limits<double>::infinity();
        return {tau, inf, inf, false};
    }
    static ActuatorParams ideal() {
        constexpr double inf = std::numeric_limits<double>::infinity();
        return {0.0, inf, inf, true};
    }
};

struct ActuatorState {
    double u_ac = 0.0;
};

double saturate(double x, double limit);

/// One Euler step of the clamped lag. The command is amplitude-clamped, the
/// lag rate is clamped to +-rate_max and the new deflection to +-u_max.
ActuatorState actuator_step(ActuatorState state, const ActuatorParams& params, double u_c, double h);

}  // namespace awbench
