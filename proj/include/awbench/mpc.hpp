#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "awbench/actuation.hpp"
#include "awbench/control_math.hpp"
#include "awbench/controllers.hpp"

namespace awbench {

enum class QpMethod {
    /// Hildreth dual coordinate ascent, warm-started with shifted multipliers.
    Hildreth,
    /// Primal active set, warm-started with the shifted previous plan and working set.
    ActiveSet,
};

struct MpcParams {
    double ts = 0.01;
    int ny = 120;
    int nu = 120;
    double lambda = 0.1;
    double u_max = 20.0;
    double du_max = 0.3;  ///< rate limit times Ts
    /// Feed the controller r(t + Ts .. t + Ny Ts) instead of holding r(t).
    bool preview = false;
    /// Include the first-order actuator lag in the prediction model.
    bool lag_in_model = true;
    QpMethod solver = QpMethod::ActiveSet;
    int max_iterations = 500;
    double tolerance = 1e-8;

    void validate() const;
};

/// y_pred = phi * x_aug + g * du over outputs k+1 .. k+Ny.
struct PredictionMatrices {
    Matrix phi;  ///< Ny x (n+1)
    Matrix g;    ///< Ny x Nu, lower triangular
};

/// Increment form of a SISO model: state [x; u_prev], input du.
DiscreteStateSpace increment_form(const DiscreteStateSpace& base);

/// Condensed prediction of the increment form of `base`.
PredictionMatrices build_prediction(const DiscreteStateSpace& base, int ny, int nu);

/// min 0.5 x' H x + f' x  s.t.  A x <= b.
struct QpProblem {
    Matrix h;
    Vector f;
    Matrix a;
    Vector b;

    void validate() const;
    double cost(const Vector& x) const { return 0.5 * x.dot(h * x) + f.dot(x); }
};

struct QpSolution {
    Vector x;
    Vector multipliers;
    int iterations = 0;
    double kkt_residual = 0.0;
    bool converged = true;  ///< false when the iteration cap was reached
    /// Constraint rows treated as active at the returned point.
    std::vector<Eigen::Index> active;
};

/// Constraint rows for |du_j| <= du_max and |u_prev + sum_{i<=j} du_i| <= u_max.
/// Row order: du upper, du lower, amplitude upper, amplitude lower (Nu rows each).
Matrix increment_constraint_matrix(int nu);
Vector increment_constraint_bounds(int nu, double u_prev, double u_max, double du_max);

/// H = 2 (G'G + lambda I),  f = 2 G' (phi x_aug - r_traj).
QpProblem build_qp(const PredictionMatrices& pred, const Vector& x_aug, const Vector& r_traj, double u_prev,
                   const MpcParams& params);

/// Primal active-set method (equality subproblems solved through A H^-1 A').
/// Needs a feasible start; without one it starts from x = 0.
class ActiveSetSolver {
public:
    ActiveSetSolver(const Matrix& h, const Matrix& a, int max_iterations = 500);

    QpSolution solve(const Vector& f, const Vector& b, const Vector* x0 = nullptr,
                     const std::vector<Eigen::Index>* working = nullptr) const;

    Eigen::Index variables() const { return h_.rows(); }
    Eigen::Index constraints() const { return a_.rows(); }

private:
    Matrix h_;
    Matrix a_;
    Eigen::LLT<Matrix> h_llt_;
    Matrix hinv_at_;
    Matrix p_;
    int max_iterations_;
};

/// Hildreth dual coordinate ascent with the Hessian and constraint products
/// factored once; repeated solves only change f and b. An iterate that is not
/// primal feasible is pulled back towards x = 0 and finished by the active-set
/// method, so the result is always feasible.
class HildrethSolver {
public:
    HildrethSolver(const Matrix& h, const Matrix& a, int max_iterations = 500, double tolerance = 1e-8);

    QpSolution solve(const Vector& f, const Vector& b, const Vector* warm_start = nullptr) const;

    Eigen::Index variables() const { return h_.rows(); }
    Eigen::Index constraints() const { return a_.rows(); }

private:
    Matrix h_;
    Matrix a_;
    Eigen::LLT<Matrix> h_llt_;
    Matrix hinv_at_;  ///< H^-1 A'
    Matrix p_;        ///< A H^-1 A'
    std::shared_ptr<const ActiveSetSolver> finish_;
    int max_iterations_;
    double tolerance_;
};

QpSolution solve_qp(const QpProblem& prob, int max_iterations = 500, double tolerance = 1e-8);
QpSolution solve_qp(const QpProblem& prob, QpMethod method, int max_iterations = 500, double tolerance = 1e-8);

std::string to_string(QpMethod method);

/// max of stationarity, primal infeasibility, dual infeasibility and complementarity.
double kkt_residual(const QpProblem& prob, const Vector& x, const Vector& multipliers);

/// Prediction model used by the MPC: the plant, optionally in series with the
/// actuator lag (state [x_p; u_ac]), sampled at Ts.
DiscreteStateSpace mpc_base_model(const StateSpace& plant, const ActuatorParams& actuator, const MpcParams& params);

class MpcController final : public Controller {
public:
    MpcController(const StateSpace& plant, const ActuatorParams& actuator, MpcParams params);

    struct Step {
        double u_c = 0.0;
        QpSolution qp;
    };

    /// One receding-horizon step from an explicit augmented state.
    Step step(const Vector& x_aug, const Vector& r_traj);

    /// Augmented state [x_p; (u_ac); u_prev] assembled from an observation.
    Vector augmented_state(const Observation& obs) const;

    std::string name() const override { return "mpc"; }
    double compute(const Observation& obs) override;
    void notify_actuation(double, double) override {}
    void reset() override;
    std::unique_ptr<Controller> clone() const override { return std::make_unique<MpcController>(*this); }
    std::size_t preview_length() const override {
        return params_.preview ? static_cast<std::size_t>(params_.ny) : 0;
    }

    const MpcParams& params() const { return params_; }
    const PredictionMatrices& prediction() const { return pred_; }
    double u_prev() const { return u_prev_; }
    int last_iterations() const { return last_iterations_; }

private:
    MpcParams params_;
    DiscreteStateSpace base_;
    PredictionMatrices pred_;
    Matrix h_;
    Eigen::LLT<Matrix> h_llt_;
    Matrix a_;
    std::shared_ptr<const HildrethSolver> hildreth_;
    std::shared_ptr<const ActiveSetSolver> active_set_;
    double u_prev_ = 0.0;
    Vector warm_;
    Vector plan_;
    std::vector<Eigen::Index> working_;
    int last_iterations_ = 0;
};

}  // namespace awbench
