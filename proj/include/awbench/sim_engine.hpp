#pragma once

#include <vector>

#include "awbench/actuation.hpp"
#include "awbench/control_math.hpp"
#include "awbench/controllers.hpp"

namespace awbench {

struct Segment {
    double start_time = 0.0;  ///< seconds
    double setpoint = 0.0;    ///< degrees
};

/// Piecewise-constant setpoint profile on [0, tf].
struct Scenario {
    std::vector<Segment> segments;
    double tf = 80.0;

    void validate() const;
    double max_abs_setpoint() const;

    /// 0 -> 150 at 1 s, -150 at 21 s, 100 at 41 s, -100 at 61 s, 80 s long.
    static Scenario benchmark_default();
};

/// Setpoint of the last segment starting at or before t. Throws outside [0, tf].
double scenario_setpoint_at(const Scenario& scenario, double t);

/// Where the robustness perturbations enter the loop.
enum class InjectionPoint {
    /// Between actuator output and plant input. The actuator input/output
    /// pair seen by the anti-windup logic is unaffected.
    PlantInput,
    /// Between controller output and actuator input.
    ControllerOutput,
};

struct SimConfig {
    double h = 0.001;   ///< physics step
    double ts = 0.01;   ///< control period, integer multiple of h
    double gain_scale = 1.0;
    double injected_delay = 0.0;  ///< seconds, rounded to whole control periods
    InjectionPoint injection = InjectionPoint::PlantInput;
    /// Abort once |y| exceeds this multiple of max|r|.
    double divergence_factor = 3.0;

    void validate() const;
    int substeps() const;
    int delay_samples() const;
};

/// Control-rate log. Arrays have floor(tf/ts)+1 entries unless the run diverged.
struct SimLog {
    std::vector<double> t, r, y, ydot, u_c, u_ac, e;
    bool diverged = false;
    double ts = 0.01;
    double tf = 0.0;
    double h = 0.001;

    /// Plant state at the last logged sample.
    std::vector<double> final_state;
    /// max |u_ac| and max |u_ac(k+1) - u_ac(k)| over every physics step.
    double max_abs_u_ac = 0.0;
    double max_micro_step_delta_u_ac = 0.0;

    std::size_t size() const { return t.size(); }
};

std::size_t expected_log_length(double tf, double ts);

/// Fixed-step closed loop: the controller runs every ts and its command is
/// held; actuator (Euler) and plant (RK4) advance with step h.
/// `controller` is cloned and reset, so the prototype is never mutated.
SimLog run_closed_loop(const StateSpace& plant, const Controller& controller, const ActuatorParams& actuator,
                       const Scenario& scenario, const SimConfig& config);

}  // namespace awbench
