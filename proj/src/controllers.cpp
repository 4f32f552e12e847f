#include "awbench/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "awbench/errors.hpp"

namespace awbench {

namespace {

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) {
        throw ValidationError(std::string(what) + " must be finite");
    }
}

double sgn(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

double state_feedback(const Vector& k, std::span<const double> x) {
    if (static_cast<std::size_t>(k.size()) != x.size()) {
        std::ostringstream msg;
        msg << "state feedback: gain has " << k.size() << " entries but the state has " << x.size();
        throw DimensionError(msg.str());
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        acc += k(static_cast<Eigen::Index>(i)) * x[i];
    }
    return acc;
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

// ---------------------------------------------------------------- PD_AW

void PdAwParams::validate() const {
    require_finite(kp, "pd_aw kp");
    require_finite(kd, "pd_aw kd");
    require_finite(kaw, "pd_aw kaw");
    if (kaw <= -1.0) {
        throw ValidationError("pd_aw kaw must be > -1");
    }
}

ControlStep<PdAwState> pd_aw_step(PdAwState state, const PdAwParams& params, double e, double ydot) {
    return {params.kp * e - params.kd * ydot - params.kaw * state.delta_u_prev, state};
}

double pd_aw_command_implicit(const PdAwParams& params, double e, double ydot, double u_ac) {
    return (params.kp * e - params.kd * ydot + params.kaw * u_ac) / (1.0 + params.kaw);
}

PdAwState notify_actuation(PdAwState state, double u_c, double u_ac) {
    state.delta_u_prev = u_c - u_ac;
    return state;
}

// ---------------------------------------------------------------- LQI_AW

void LqiAwParams::validate() const {
    require_finite(k_i, "lqi_aw k_i");
    require_finite(kaw, "lqi_aw kaw");
    if (k_xp.size() < 1 || !k_xp.allFinite()) {
        throw ValidationError("lqi_aw k_xp must be a non-empty finite vector");
    }
}

LqiAwParams LqiAwParams::design(const StateSpace& plant, const Matrix& q, const Matrix& r, double kaw) {
    const LqiGains g = lqi_gains(plant, q, r);
    LqiAwParams p;
    p.k_i = -g.k_i;
    p.k_xp = g.k_xp.row(0).transpose();
    p.kaw = kaw;
    p.validate();
    return p;
}

ControlStep<LqiAwState> lqi_aw_step(LqiAwState state, const LqiAwParams& params, double e,
                                    std::span<const double> x_p, double ts) {
    if (!(ts > 0.0)) {
        throw ValidationError("lqi_aw_step: Ts must be > 0");
    }
    const double fb = state_feedback(params.k_xp, x_p);
    state.e_i += ts * (e - params.kaw * state.delta_u_prev);
    return {params.k_i * state.e_i - fb, state};
}

ControlStep<LqiAwState> lqi_aw_step_implicit(LqiAwState state, const LqiAwParams& params, double e,
                                             std::span<const double> x_p, double ts, double u_ac) {
    if (!(ts > 0.0)) {
        throw ValidationError("lqi_aw_step_implicit: Ts must be > 0");
    }
    const double fb = state_feedback(params.k_xp, x_p);
    // u = k_i (e_I + Ts e + Ts kaw u_ac) - fb - k_i Ts kaw u
    const double coupling = params.k_i * ts * params.kaw;
    const double u_c = (params.k_i * (state.e_i + ts * (e + params.kaw * u_ac)) - fb) / (1.0 + coupling);
    state.e_i += ts * (e - params.kaw * (u_c - u_ac));
    return {u_c, state};
}

LqiAwState notify_actuation(LqiAwState state, double u_c, double u_ac) {
    state.delta_u_prev = u_c - u_ac;
    return state;
}

// ---------------------------------------------------------------- classic PID

void validate(const AwMode& mode) {
    std::visit(overloaded{
                   [](const aw::IntegralClipping& m) {
                       if (!(m.limit > 0.0)) {
                           throw ValidationError("integral clipping limit must be > 0");
                       }
                   },
                   [](const aw::BackCalculation& m) { require_finite(m.kaw, "back-calculation kaw"); },
                   [](const auto&) {},
               },
               mode);
}

std::string to_string(const AwMode& mode) {
    return std::visit(overloaded{
                          [](const aw::None&) { return std::string("none"); },
                          [](const aw::IntegralClipping&) { return std::string("clipping"); },
                          [](const aw::ConditionalIntegration&) { return std::string("conditional"); },
                          [](const aw::IntegratorClamping&) { return std::string("clamping"); },
                          [](const aw::BackCalculation&) { return std::string("back_calculation"); },
                      },
                      mode);
}

ControlStep<PidState> classic_pid_step(PidState state, const PidGains& gains, const AwMode& mode, double e,
                                       double ydot, double u_c_prev, double u_ac_prev, double ts,
                                       double saturation_tol) {
    if (!(ts > 0.0)) {
        throw ValidationError("classic_pid_step: Ts must be > 0");
    }
    const bool saturated = std::abs(u_c_prev - u_ac_prev) > saturation_tol;

    double input = e;
    std::visit(overloaded{
                   [&](const aw::ConditionalIntegration&) {
                       if (saturated) input = 0.0;
                   },
                   [&](const aw::IntegratorClamping&) {
                       if (saturated && sgn(e) == sgn(u_c_prev)) input = 0.0;
                   },
                   [&](const aw::BackCalculation& m) { input = e - m.kaw * (u_c_prev - u_ac_prev); },
                   [](const auto&) {},
               },
               mode);
    state.integral += ts * input;

    double i_term = gains.ki * state.integral;
    if (const auto* clip = std::get_if<aw::IntegralClipping>(&mode)) {
        i_term = std::clamp(i_term, -clip->limit, clip->limit);
    }
    return {gains.kp * e + i_term - gains.kd * ydot, state};
}

// ---------------------------------------------------------------- MAW

MawCompensator::MawCompensator(StateSpace plant_model, Matrix gain)
    : plant(std::move(plant_model)), f_aw(std::move(gain)), x_aw(Vector::Zero(plant.states())) {
    validate();
}

void MawCompensator::validate() const {
    plant.validate();
    if (plant.inputs() != 1 || plant.outputs() != 1) {
        throw DimensionError("MawCompensator: plant must be SISO");
    }
    if (f_aw.rows() != 1 || f_aw.cols() != plant.states()) {
        throw DimensionError("MawCompensator: F_aw must be 1 x n");
    }
    if (x_aw.size() != plant.states()) {
        throw DimensionError("MawCompensator: x_aw must have n entries");
    }
    if (!f_aw.allFinite() || !x_aw.allFinite()) {
        throw ValidationError("MawCompensator: non-finite gain or state");
    }
}

MawStep maw_step(MawCompensator comp, double delta_u, double h) {
    if (!(h > 0.0)) {
        throw ValidationError("maw_step: step size must be > 0");
    }
    comp.validate();
    const Matrix a_cl = comp.plant.A + comp.plant.B * comp.f_aw;
    const Vector drive = comp.plant.B.col(0) * delta_u;
    auto f = [&](const Vector& x) -> Vector { return a_cl * x + drive; };

    const Vector& x = comp.x_aw;
    const Vector k1 = f(x);
    const Vector k2 = f(x + 0.5 * h * k1);
    const Vector k3 = f(x + 0.5 * h * k2);
    const Vector k4 = f(x + h * k3);
    comp.x_aw = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    MawStep out;
    out.u_aw = (comp.f_aw * comp.x_aw)(0, 0);
    out.y_aw = (comp.plant.C * comp.x_aw)(0, 0);
    out.comp = std::move(comp);
    return out;
}

// ---------------------------------------------------------------- loop adapters

PdAwController::PdAwController(PdAwParams params, AlgebraicLoop loop) : params_(params), loop_(loop) {
    params_.validate();
}

double PdAwController::compute(const Observation& obs) {
    if (loop_ == AlgebraicLoop::Implicit) {
        return pd_aw_command_implicit(params_, obs.r - obs.y, obs.ydot, obs.u_ac);
    }
    auto step = pd_aw_step(state_, params_, obs.r - obs.y, obs.ydot);
    state_ = step.state;
    return step.u_c;
}

void PdAwController::notify_actuation(double u_c, double u_ac) { state_ = awbench::notify_actuation(state_, u_c, u_ac); }

LqiAwController::LqiAwController(LqiAwParams params, double ts, AlgebraicLoop loop)
    : params_(std::move(params)), ts_(ts), loop_(loop) {
    params_.validate();
    if (!(ts_ > 0.0)) {
        throw ValidationError("LqiAwController: Ts must be > 0");
    }
}

double LqiAwController::compute(const Observation& obs) {
    const double e = obs.r - obs.y;
    auto step = loop_ == AlgebraicLoop::Implicit ? lqi_aw_step_implicit(state_, params_, e, obs.x_p, ts_, obs.u_ac)
                                                 : lqi_aw_step(state_, params_, e, obs.x_p, ts_);
    state_ = step.state;
    return step.u_c;
}

void LqiAwController::notify_actuation(double u_c, double u_ac) {
    state_ = awbench::notify_actuation(state_, u_c, u_ac);
}

ClassicPidController::ClassicPidController(PidGains gains, AwMode mode, double ts)
    : gains_(gains), mode_(mode), ts_(ts) {
    awbench::validate(mode_);
    if (!(ts_ > 0.0)) {
        throw ValidationError("ClassicPidController: Ts must be > 0");
    }
}

double ClassicPidController::compute(const Observation& obs) {
    auto step = classic_pid_step(state_, gains_, mode_, obs.r - obs.y, obs.ydot, u_c_prev_, u_ac_prev_, ts_);
    state_ = step.state;
    return step.u_c;
}

void ClassicPidController::notify_actuation(double u_c, double u_ac) {
    u_c_prev_ = u_c;
    u_ac_prev_ = u_ac;
}

void ClassicPidController::reset() {
    state_ = {};
    u_c_prev_ = 0.0;
    u_ac_prev_ = 0.0;
}

}  // namespace awbench
