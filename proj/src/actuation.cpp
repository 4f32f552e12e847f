#include "awbench/actuation.hpp"

#include <algorithm>
#include <cmath>

#include "awbench/errors.hpp"

namespace awbench {

void ActuatorParams::validate() const {
    if (!lag_free && !(tau > 0.0)) {
        throw ValidationError("actuator: tau must be > 0");
    }
    if (!(u_max > 0.0)) {
        throw ValidationError("actuator: u_max must be > 0");
    }
    if (!(rate_max > 0.0)) {
        throw ValidationError("actuator: rate_max must be > 0");
    }
}

double saturate(double x, double limit) { return std::clamp(x, -limit, limit); }

ActuatorState actuator_step(ActuatorState state, const ActuatorParams& params, double u_c, double h) {
    if (!(h > 0.0)) {
        throw ValidationError("actuator_step: step size must be > 0");
    }
    const double target = saturate(u_c, params.u_max);
    double rate = params.lag_free ? (target - state.u_ac) / h : (target - state.u_ac) / params.tau;
    rate = saturate(rate, params.rate_max);
    state.u_ac = saturate(state.u_ac + h * rate, params.u_max);
    return state;
}

}  // namespace awbench
