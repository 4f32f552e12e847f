#pragma once

#include <memory>
#include <span>
#include <string>
#include <variant>

#include "awbench/control_math.hpp"

namespace awbench {

/// Result of one control evaluation: the command and the successor state.
template <class State>
struct ControlStep {
    double u_c = 0.0;
    State state;
};

/// How the deficiency Delta u_c = u_c - u_ac enters a law that also produces u_c.
enum class AlgebraicLoop {
    /// Use the deficiency recorded at the end of the previous control period.
    Delayed,
    /// Solve the (linear) loop at the sample using the measured u_ac.
    Implicit,
};

// ---------------------------------------------------------------- PD_AW

struct PdAwParams {
    double kp = 8.0;
    double kd = 6.0;
    double kaw = 4.0;

    void validate() const;
};

struct PdAwState {
    double delta_u_prev = 0.0;
};

/// u_c = Kp e - Kd ydot - Kaw * delta_u_prev.
ControlStep<PdAwState> pd_aw_step(PdAwState state, const PdAwParams& params, double e, double ydot);

/// u_c solving u_c = Kp e - Kd ydot - Kaw (u_c - u_ac), i.e. (Kp e - Kd ydot + Kaw u_ac) / (1 + Kaw).
double pd_aw_command_implicit(const PdAwParams& params, double e, double ydot, double u_ac);

// ---------------------------------------------------------------- LQI_AW

struct LqiAwParams {
    /// Integral gain with tracking sign: u_c = k_i * e_I - k_xp x_p.
    /// Equals minus the first entry of the CARE gain K_x.
    double k_i = 0.0;
    Vector k_xp;
    double kaw = 4.0;

    void validate() const;

    /// CARE design on the error-integral augmented plant. Throws
    /// StabilizabilityError if the unconstrained loop is not Hurwitz.
    static LqiAwParams design(const StateSpace& plant, const Matrix& q, const Matrix& r, double kaw);
};

struct LqiAwState {
    double e_i = 0.0;
    double delta_u_prev = 0.0;
};

/// e_I += Ts (e - Kaw delta_u_prev);  u_c = k_i e_I - k_xp x_p.
ControlStep<LqiAwState> lqi_aw_step(LqiAwState state, const LqiAwParams& params, double e,
                                    std::span<const double> x_p, double ts);

/// Same law with the deficiency taken at the current sample,
/// e_I' = e_I + Ts (e - Kaw (u_c - u_ac)), solved jointly with u_c.
ControlStep<LqiAwState> lqi_aw_step_implicit(LqiAwState state, const LqiAwParams& params, double e,
                                             std::span<const double> x_p, double ts, double u_ac);

/// Records delta_u = u_c - u_ac for the next control sample.
PdAwState notify_actuation(PdAwState state, double u_c, double u_ac);
LqiAwState notify_actuation(LqiAwState state, double u_c, double u_ac);

// ---------------------------------------------------------------- classic PID

struct PidGains {
    double kp = 0.0;
    double ki = 0.0;
    double kd = 0.0;
};

namespace aw {
struct None {};
/// Integrator branch output hard-limited to +-limit.
struct IntegralClipping {
    double limit = 16.0;
};
/// Integrator frozen while the actuator is not following the command.
struct ConditionalIntegration {};
/// Frozen only when additionally sgn(e) == sgn(u_c).
struct IntegratorClamping {};
/// Integrator input e - kaw (u_c - u_ac).
struct BackCalculation {
    double kaw = 1.0;
};
}  // namespace aw

using AwMode = std::variant<aw::None, aw::IntegralClipping, aw::ConditionalIntegration, aw::IntegratorClamping,
                            aw::BackCalculation>;

void validate(const AwMode& mode);
std::string to_string(const AwMode& mode);

struct PidState {
    double integral = 0.0;  ///< integral of the (possibly modified) integrator input
};

/// Cascade PID with rate feedback: u_c = Kp e + I - Kd ydot.
/// `saturation_tol` decides when u_ac_prev and u_c_prev count as different.
ControlStep<PidState> classic_pid_step(PidState state, const PidGains& gains, const AwMode& mode, double e,
                                       double ydot, double u_c_prev, double u_ac_prev, double ts,
                                       double saturation_tol = 1e-9);

// ---------------------------------------------------------------- MAW

/// x_aw' = (A + B F) x_aw + B du,  u_aw = F x_aw,  y_aw = C x_aw.
struct MawCompensator {
    StateSpace plant;
    Matrix f_aw;  ///< 1 x n
    Vector x_aw;

    MawCompensator() = default;
    MawCompensator(StateSpace plant_model, Matrix gain);

    void validate() const;
};

struct MawStep {
    double u_aw = 0.0;
    double y_aw = 0.0;
    MawCompensator comp;
};

/// One RK4 step of length h with delta_u held.
MawStep maw_step(MawCompensator comp, double delta_u, double h);

// ---------------------------------------------------------------- loop interface

/// What a controller may read at a control sample.
struct Observation {
    double t = 0.0;
    double r = 0.0;
    double y = 0.0;
    double ydot = 0.0;
    std::span<const double> x_p;
    double u_ac = 0.0;
    /// r(t + Ts), ..., r(t + N Ts) when the controller asked for preview_length() = N.
    std::span<const double> r_preview;
};

/// A stateful control law driven by the closed-loop engine. Each engine run
/// owns its own clone.
class Controller {
public:
    virtual ~Controller() = default;

    virtual std::string name() const = 0;
    virtual double compute(const Observation& obs) = 0;
    /// Called once per control period with the command and the actuator
    /// output at the end of that period.
    virtual void notify_actuation(double u_c, double u_ac) = 0;
    virtual void reset() = 0;
    virtual std::unique_ptr<Controller> clone() const = 0;
    virtual std::size_t preview_length() const { return 0; }
};

class PdAwController final : public Controller {
public:
    explicit PdAwController(PdAwParams params, AlgebraicLoop loop = AlgebraicLoop::Implicit);

    std::string name() const override { return "pd_aw"; }
    double compute(const Observation& obs) override;
    void notify_actuation(double u_c, double u_ac) override;
    void reset() override { state_ = {}; }
    std::unique_ptr<Controller> clone() const override { return std::make_unique<PdAwController>(*this); }

    const PdAwParams& params() const { return params_; }
    const PdAwState& state() const { return state_; }

private:
    PdAwParams params_;
    AlgebraicLoop loop_;
    PdAwState state_;
};

class LqiAwController final : public Controller {
public:
    LqiAwController(LqiAwParams params, double ts, AlgebraicLoop loop = AlgebraicLoop::Delayed);

    std::string name() const override { return "lqi_aw"; }
    double compute(const Observation& obs) override;
    void notify_actuation(double u_c, double u_ac) override;
    void reset() override { state_ = {}; }
    std::unique_ptr<Controller> clone() const override { return std::make_unique<LqiAwController>(*this); }

    const LqiAwParams& params() const { return params_; }
    const LqiAwState& state() const { return state_; }

private:
    LqiAwParams params_;
    double ts_;
    AlgebraicLoop loop_;
    LqiAwState state_;
};

class ClassicPidController final : public Controller {
public:
    ClassicPidController(PidGains gains, AwMode mode, double ts);

    std::string name() const override { return "classic_pid"; }
    double compute(const Observation& obs) override;
    void notify_actuation(double u_c, double u_ac) override;
    void reset() override;
    std::unique_ptr<Controller> clone() const override { return std::make_unique<ClassicPidController>(*this); }

private:
    PidGains gains_;
    AwMode mode_;
    double ts_;
    PidState state_;
    double u_c_prev_ = 0.0;
    double u_ac_prev_ = 0.0;
};

}  // namespace awbench
