#include "awbench/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "awbench/errors.hpp"

namespace awbench {

namespace {

constexpr double kTimeSlack = 1e-9;

}  // namespace

void Scenario::validate() const {
    if (segments.empty()) {
        throw ValidationError("scenario: at least one segment is required");
    }
    if (segments.front().start_time != 0.0) {
        throw ValidationError("scenario: the first segment must start at t = 0");
    }
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (!std::isfinite(segments[i].setpoint) || !std::isfinite(segments[i].start_time)) {
            throw ValidationError("scenario: non-finite segment");
        }
        if (i > 0 && !(segments[i].start_time > segments[i - 1].start_time)) {
            throw ValidationError("scenario: segment start times must be strictly increasing");
        }
    }
    if (!(tf > segments.back().start_time) || !std::isfinite(tf)) {
        throw ValidationError("scenario: tf must exceed the last segment start");
    }
}

double Scenario::max_abs_setpoint() const {
    double m = 0.0;
    for (const auto& s : segments) m = std::max(m, std::abs(s.setpoint));
    return m;
}

Scenario Scenario::benchmark_default() {
    return Scenario{{{0.0, 0.0}, {1.0, 150.0}, {21.0, -150.0}, {41.0, 100.0}, {61.0, -100.0}}, 80.0};
}

double scenario_setpoint_at(const Scenario& scenario, double t) {
    if (scenario.segments.empty()) {
        throw ValidationError("scenario: no segments");
    }
    if (!(t >= -kTimeSlack) || !(t <= scenario.tf + kTimeSlack)) {
        std::ostringstream msg;
        msg << "scenario_setpoint_at: t = " << t << " is outside [0, " << scenario.tf << "]";
        throw std::out_of_range(msg.str());
    }
    double value = scenario.segments.front().setpoint;
    for (const auto& seg : scenario.segments) {
        if (seg.start_time <= t + kTimeSlack) {
            value = seg.setpoint;
        } else {
            break;
        }
    }
    return value;
}

void SimConfig::validate() const {
    if (!(h > 0.0) || !(ts > 0.0)) {
        throw ValidationError("sim: h and ts must be > 0");
    }
    const double ratio = ts / h;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio || std::round(ratio) < 1.0) {
        throw ValidationError("sim: ts must be an integer multiple of h");
    }
    if (!(gain_scale > 0.0) || !std::isfinite(gain_scale)) {
        throw ValidationError("sim: gain_scale must be > 0");
    }
    if (!(injected_delay >= 0.0) || !std::isfinite(injected_delay)) {
        throw ValidationError("sim: injected_delay must be >= 0");
    }
    if (!(divergence_factor > 0.0)) {
        throw ValidationError("sim: divergence_factor must be > 0");
    }
}

int SimConfig::substeps() const { return static_cast<int>(std::lround(ts / h)); }

int SimConfig::delay_samples() const { return static_cast<int>(std::lround(injected_delay / ts)); }

std::size_t expected_log_length(double tf, double ts) {
    return static_cast<std::size_t>(std::floor(tf / ts + kTimeSlack)) + 1;
}

SimLog run_closed_loop(const StateSpace& plant, const Controller& controller, const ActuatorParams& actuator,
                       const Scenario& scenario, const SimConfig& config) {
    plant.validate();
    if (plant.inputs() != 1 || plant.outputs() != 1) {
        throw DimensionError("run_closed_loop: plant must be SISO");
    }
    actuator.validate();
    scenario.validate();
    config.validate();

    auto ctrl = controller.clone();
    ctrl->reset();

    const auto n = plant.states();
    const int substeps = config.substeps();
    const double h = config.h;
    const double g = config.gain_scale;
    const int delay = config.delay_samples();
    const bool at_plant = config.injection == InjectionPoint::PlantInput;
    const std::size_t samples = expected_log_length(scenario.tf, config.ts);
    const double r_max = scenario.max_abs_setpoint();
    const double y_limit =
        r_max > 0.0 ? config.divergence_factor * r_max : std::numeric_limits<double>::infinity();

    SimLog log;
    log.ts = config.ts;
    log.tf = scenario.tf;
    log.h = h;
    for (auto* v : {&log.t, &log.r, &log.y, &log.ydot, &log.u_c, &log.u_ac, &log.e}) v->reserve(samples);

    // Transport delay lines, initialised at rest.
    std::deque<double> plant_line(at_plant ? static_cast<std::size_t>(delay * substeps) : 0, 0.0);
    std::deque<double> command_line(at_plant ? 0 : static_cast<std::size_t>(delay), 0.0);

    Vector x = Vector::Zero(n);
    ActuatorState act;
    const Vector b = plant.B.col(0);
    const Matrix ca = plant.C * plant.A;
    const double cb = (plant.C * plant.B)(0, 0);

    // Input actually reaching the plant during the coming physics step.
    auto plant_input = [&](double u_ac_now) {
        if (!at_plant) return u_ac_now;
        return g * (plant_line.empty() ? u_ac_now : plant_line.front());
    };

    const std::size_t preview = ctrl->preview_length();
    std::vector<double> r_preview(preview);

    for (std::size_t k = 0; k < samples; ++k) {
        const double t = static_cast<double>(k) * config.ts;
        const double r = scenario_setpoint_at(scenario, std::min(t, scenario.tf));
        const double y = (plant.C * x)(0, 0);
        const double ydot = (ca * x)(0, 0) + cb * plant_input(act.u_ac);
        for (std::size_t i = 0; i < preview; ++i) {
            const double tp = std::min(t + static_cast<double>(i + 1) * config.ts, scenario.tf);
            r_preview[i] = scenario_setpoint_at(scenario, tp);
        }

        Observation obs;
        obs.t = t;
        obs.r = r;
        obs.y = y;
        obs.ydot = ydot;
        obs.x_p = std::span<const double>(x.data(), static_cast<std::size_t>(n));
        obs.u_ac = act.u_ac;
        obs.r_preview = r_preview;
        const double u_c = ctrl->compute(obs);

        log.t.push_back(t);
        log.r.push_back(r);
        log.y.push_back(y);
        log.ydot.push_back(ydot);
        log.u_c.push_back(u_c);
        log.u_ac.push_back(act.u_ac);
        log.e.push_back(r - y);
        log.final_state.assign(x.data(), x.data() + n);
        log.max_abs_u_ac = std::max(log.max_abs_u_ac, std::abs(act.u_ac));

        if (k + 1 == samples) break;

        double command = u_c;
        if (!at_plant) {
            if (delay > 0) {
                command_line.push_back(u_c);
                command = command_line.front();
                command_line.pop_front();
            }
            command *= g;
        }

        for (int s = 0; s < substeps; ++s) {
            double u_in = act.u_ac;
            if (at_plant) {
                if (!plant_line.empty()) {
                    plant_line.push_back(act.u_ac);
                    u_in = plant_line.front();
                    plant_line.pop_front();
                }
                u_in *= g;
            }
            const double before = act.u_ac;
            act = actuator_step(act, actuator, command, h);
            log.max_micro_step_delta_u_ac = std::max(log.max_micro_step_delta_u_ac, std::abs(act.u_ac - before));
            log.max_abs_u_ac = std::max(log.max_abs_u_ac, std::abs(act.u_ac));

            const Vector drive = b * u_in;
            const Vector k1 = plant.A * x + drive;
            const Vector k2 = plant.A * (x + 0.5 * h * k1) + drive;
            const Vector k3 = plant.A * (x + 0.5 * h * k2) + drive;
            const Vector k4 = plant.A * (x + h * k3) + drive;
            x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        ctrl->notify_actuation(u_c, act.u_ac);

        const double y_next = (plant.C * x)(0, 0);
        if (!x.allFinite() || std::abs(y_next) > y_limit) {
            log.diverged = true;
            log.final_state.assign(x.data(), x.data() + n);
            break;
        }
    }
    return log;
}

}  // namespace awbench
