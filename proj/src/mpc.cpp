#include "awbench/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "awbench/errors.hpp"

namespace awbench {

namespace {

// Hildreth sweeps between attempts at an exact active-set solve.
constexpr int kPolishInterval = 5;
constexpr int kRefinePasses = 8;

}  // namespace

void MpcParams::validate() const {
    if (!(ts > 0.0)) throw ValidationError("mpc: Ts must be > 0");
    if (ny < 1) throw ValidationError("mpc: Ny must be >= 1");
    if (nu < 1 || nu > ny) throw ValidationError("mpc: Nu must satisfy 1 <= Nu <= Ny");
    if (!(lambda >= 0.0)) throw ValidationError("mpc: lambda must be >= 0");
    if (!(u_max > 0.0)) throw ValidationError("mpc: u_max must be > 0");
    if (!(du_max > 0.0)) throw ValidationError("mpc: du_max must be > 0");
    if (solver != QpMethod::Hildreth && solver != QpMethod::ActiveSet) throw ValidationError("mpc: unknown QP method");
    if (max_iterations < 1) throw ValidationError("mpc: max_iterations must be >= 1");
    if (!(tolerance > 0.0)) throw ValidationError("mpc: tolerance must be > 0");
}

DiscreteStateSpace increment_form(const DiscreteStateSpace& base) {
    base.validate();
    if (base.Bd.cols() != 1 || base.C.rows() != 1) {
        throw DimensionError("increment_form: model must be SISO");
    }
    const auto n = base.states();
    DiscreteStateSpace inc;
    inc.Ts = base.Ts;
    inc.Ad = Matrix::Zero(n + 1, n + 1);
    inc.Ad.topLeftCorner(n, n) = base.Ad;
    inc.Ad.topRightCorner(n, 1) = base.Bd;
    inc.Ad(n, n) = 1.0;
    inc.Bd = Matrix::Zero(n + 1, 1);
    inc.Bd.topRows(n) = base.Bd;
    inc.Bd(n, 0) = 1.0;
    inc.C = Matrix::Zero(1, n + 1);
    inc.C.leftCols(n) = base.C;
    return inc;
}

PredictionMatrices build_prediction(const DiscreteStateSpace& base, int ny, int nu) {
    if (ny < 1 || nu < 1) {
        throw ValidationError("build_prediction: horizons must be >= 1");
    }
    if (nu > ny) {
        throw ValidationError("build_prediction: Nu must not exceed Ny");
    }
    const DiscreteStateSpace inc = increment_form(base);
    const auto n = inc.states();

    PredictionMatrices pred;
    pred.phi = Matrix::Zero(ny, n);
    pred.g = Matrix::Zero(ny, nu);

    // markov[i] = C A^i B, i = 0 .. ny-1
    Vector markov(ny);
    Matrix c_pow = inc.C;  // C A^i
    for (int i = 0; i < ny; ++i) {
        markov(i) = (c_pow * inc.Bd)(0, 0);
        c_pow = c_pow * inc.Ad;
        pred.phi.row(i) = c_pow;
    }
    for (int i = 0; i < ny; ++i) {
        for (int j = 0; j <= std::min(i, nu - 1); ++j) {
            pred.g(i, j) = markov(i - j);
        }
    }
    return pred;
}

void QpProblem::validate() const {
    if (h.rows() != h.cols() || h.rows() < 1) throw DimensionError("qp: H must be square");
    if (f.size() != h.rows()) throw DimensionError("qp: f must match H");
    if (a.rows() != b.size()) throw DimensionError("qp: A and b row counts differ");
    if (a.rows() > 0 && a.cols() != h.rows()) throw DimensionError("qp: A must have one column per variable");
}

Matrix increment_constraint_matrix(int nu) {
    Matrix a = Matrix::Zero(4 * nu, nu);
    for (int j = 0; j < nu; ++j) {
        a(j, j) = 1.0;
        a(nu + j, j) = -1.0;
        for (int i = 0; i <= j; ++i) {
            a(2 * nu + j, i) = 1.0;
            a(3 * nu + j, i) = -1.0;
        }
    }
    return a;
}

Vector increment_constraint_bounds(int nu, double u_prev, double u_max, double du_max) {
    Vector b(4 * nu);
    b.segment(0, nu).setConstant(du_max);
    b.segment(nu, nu).setConstant(du_max);
    b.segment(2 * nu, nu).setConstant(u_max - u_prev);
    b.segment(3 * nu, nu).setConstant(u_max + u_prev);
    return b;
}

QpProblem build_qp(const PredictionMatrices& pred, const Vector& x_aug, const Vector& r_traj, double u_prev,
                   const MpcParams& params) {
    if (x_aug.size() != pred.phi.cols()) throw DimensionError("build_qp: x_aug does not match the prediction");
    if (r_traj.size() != pred.phi.rows()) throw DimensionError("build_qp: r_traj must have Ny entries");
    const auto nu = static_cast<int>(pred.g.cols());

    QpProblem qp;
    qp.h = 2.0 * (pred.g.transpose() * pred.g + params.lambda * Matrix::Identity(nu, nu));
    qp.f = 2.0 * pred.g.transpose() * (pred.phi * x_aug - r_traj);
    qp.a = increment_constraint_matrix(nu);
    qp.b = increment_constraint_bounds(nu, u_prev, params.u_max, params.du_max);
    return qp;
}

double kkt_residual(const QpProblem& prob, const Vector& x, const Vector& multipliers) {
    double res = (prob.h * x + prob.f + prob.a.transpose() * multipliers).cwiseAbs().maxCoeff();
    if (prob.a.rows() > 0) {
        const Vector slack = prob.a * x - prob.b;
        for (Eigen::Index i = 0; i < slack.size(); ++i) {
            res = std::max(res, std::max(0.0, slack(i)));
            res = std::max(res, std::max(0.0, -multipliers(i)));
            res = std::max(res, std::abs(multipliers(i) * slack(i)));
        }
    }
    return res;
}

HildrethSolver::HildrethSolver(const Matrix& h, const Matrix& a, int max_iterations, double tolerance)
    : h_(h), a_(a), h_llt_(h), max_iterations_(max_iterations), tolerance_(tolerance) {
    if (h_.rows() != h_.cols() || h_.rows() < 1) throw DimensionError("hildreth: H must be square");
    if (a_.rows() > 0 && a_.cols() != h_.rows()) throw DimensionError("hildreth: A has the wrong column count");
    if (h_llt_.info() != Eigen::Success) {
        throw ValidationError("hildreth: H must be symmetric positive definite");
    }
    hinv_at_ = h_llt_.solve(a_.transpose());
    p_ = a_ * hinv_at_;
    finish_ = std::make_shared<const ActiveSetSolver>(h_, a_, max_iterations_);
}

QpSolution HildrethSolver::solve(const Vector& f, const Vector& b, const Vector* warm_start) const {
    if (f.size() != h_.rows()) throw DimensionError("hildreth: f has the wrong size");
    if (b.size() != a_.rows()) throw DimensionError("hildreth: b has the wrong size");

    const auto m = a_.rows();
    QpSolution sol;
    const Vector x_free = -h_llt_.solve(f);
    sol.x = x_free;
    sol.multipliers = Vector::Zero(m);
    if (m == 0) return sol;

    // Dual: min 0.5 l' P l + l' d, l >= 0, with d = b - A x_free.
    const Vector d = b - a_ * x_free;
    if ((d.array() >= 0.0).all()) {
        return sol;
    }

    Vector lambda = Vector::Zero(m);
    Vector w = Vector::Zero(m);  // P * lambda
    if (warm_start != nullptr && warm_start->size() == m) {
        lambda = warm_start->cwiseMax(0.0);
        if (lambda.any()) w = p_ * lambda;
    }

    // Primal-dual active-set refinement seeded with the support of the current
    // multipliers. Accepted only if it reaches a KKT point.
    Vector x_exact;
    Vector lam_exact;
    const double feas_tol = 1e-12 * (1.0 + b.cwiseAbs().maxCoeff());
    auto try_exact = [&]() {
        std::vector<char> in(static_cast<std::size_t>(m), 0);
        for (Eigen::Index i = 0; i < m; ++i) in[static_cast<std::size_t>(i)] = lambda(i) > 0.0;
        for (int pass = 0; pass < kRefinePasses; ++pass) {
            std::vector<Eigen::Index> active;
            for (Eigen::Index i = 0; i < m; ++i) {
                if (in[static_cast<std::size_t>(i)]) active.push_back(i);
            }
            const auto k = static_cast<Eigen::Index>(active.size());
            lam_exact = Vector::Zero(m);
            if (k > 0) {
                Matrix p_ss(k, k);
                Vector rhs(k);
                for (Eigen::Index r = 0; r < k; ++r) {
                    rhs(r) = -d(active[r]);
                    for (Eigen::Index c = 0; c < k; ++c) p_ss(r, c) = p_(active[r], active[c]);
                }
                Eigen::LDLT<Matrix> ldlt(p_ss);
                if (ldlt.info() != Eigen::Success) return false;
                const Vector mu = ldlt.solve(rhs);
                if (!mu.allFinite()) return false;
                for (Eigen::Index r = 0; r < k; ++r) lam_exact(active[r]) = mu(r);
            }
            x_exact = x_free - hinv_at_ * lam_exact;
            const Vector slack = a_ * x_exact - b;
            bool changed = false;
            for (Eigen::Index i = 0; i < m; ++i) {
                const bool now = in[static_cast<std::size_t>(i)] ? lam_exact(i) >= 0.0 : slack(i) > feas_tol;
                if (now != static_cast<bool>(in[static_cast<std::size_t>(i)])) changed = true;
                in[static_cast<std::size_t>(i)] = now;
            }
            if (!changed) return slack.maxCoeff() <= feas_tol;
        }
        return false;
    };

    sol.converged = false;
    bool exact = false;
    int support = -1;
    for (int it = 1; it <= max_iterations_; ++it) {
        double change_sq = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            const double updated = std::max(0.0, lambda(i) - (d(i) + w(i)) / p_(i, i));
            const double delta = updated - lambda(i);
            if (delta != 0.0) {
                w.noalias() += delta * p_.col(i);
                lambda(i) = updated;
                change_sq += delta * delta;
            }
        }
        sol.iterations = it;
        const double scale = std::max(1.0, lambda.squaredNorm());
        if (!std::isfinite(scale) || scale > 1e24) {
            throw InfeasibleProblemError("hildreth: multipliers diverge; the constraint set is infeasible");
        }
        if (change_sq <= tolerance_ * tolerance_ * scale) {
            sol.converged = true;
            break;
        }
        const int count = static_cast<int>((lambda.array() > 0.0).count());
        if (count == support && it % kPolishInterval == 0 && try_exact()) {
            exact = true;
            break;
        }
        support = count;
    }

    Vector x = x_free - hinv_at_ * lambda;
    if (exact || try_exact()) {
        x = x_exact;
        lambda = lam_exact;
        sol.converged = true;
    }

    const Vector slack = a_ * x - b;
    double res = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        res = std::max(res, std::abs(lambda(i) * slack(i)));
    }
    if (slack.maxCoeff() > feas_tol || res > 1e-9) {
        // Dual iterate not accurate enough: shrink it onto the feasible set along
        // the segment to 0 and let the active-set method finish.
        if ((-b).maxCoeff() > feas_tol) {
            throw InfeasibleProblemError("hildreth: no feasible point found; the constraint set looks infeasible");
        }
        const Vector ax = a_ * x;
        double theta = 1.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (ax(i) > b(i)) theta = std::min(theta, b(i) / ax(i));
        }
        const Vector start = theta * x;
        std::vector<Eigen::Index> hint;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (lambda(i) > 0.0) hint.push_back(i);
        }
        auto finished = finish_->solve(f, b, &start, &hint);
        finished.iterations += sol.iterations;
        return finished;
    }

    sol.x = x;
    sol.multipliers = lambda;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (lambda(i) > 0.0) sol.active.push_back(i);
    }
    sol.kkt_residual = std::max(res, std::max(0.0, slack.maxCoeff()));
    return sol;
}

ActiveSetSolver::ActiveSetSolver(const Matrix& h, const Matrix& a, int max_iterations)
    : h_(h), a_(a), h_llt_(h), max_iterations_(max_iterations) {
    if (h_.rows() != h_.cols() || h_.rows() < 1) throw DimensionError("active set: H must be square");
    if (a_.rows() > 0 && a_.cols() != h_.rows()) throw DimensionError("active set: A has the wrong column count");
    if (h_llt_.info() != Eigen::Success) {
        throw ValidationError("active set: H must be symmetric positive definite");
    }
    hinv_at_ = h_llt_.solve(a_.transpose());
    p_ = a_ * hinv_at_;
}

namespace {

// Cholesky factor of P restricted to a growing/shrinking working set.
class WorkingSet {
public:
    WorkingSet(const Matrix& p, Eigen::Index capacity) : p_(p), l_(capacity, capacity), in_(p.rows(), 0) {}

    std::size_t size() const { return rows_.size(); }
    bool contains(Eigen::Index i) const { return in_[static_cast<std::size_t>(i)] != 0; }
    const std::vector<Eigen::Index>& rows() const { return rows_; }

    // Appends row i unless it is (numerically) dependent on the current rows.
    bool add(Eigen::Index i) {
        const auto k = static_cast<Eigen::Index>(rows_.size());
        if (contains(i) || k >= l_.rows()) return false;
        Vector y(k);
        for (Eigen::Index r = 0; r < k; ++r) y(r) = p_(rows_[static_cast<std::size_t>(r)], i);
        if (k > 0) l_.topLeftCorner(k, k).triangularView<Eigen::Lower>().solveInPlace(y);
        const double pivot = p_(i, i) - y.squaredNorm();
        if (!(pivot > kDependenceTol * p_(i, i))) return false;
        l_.row(k).head(k) = y.transpose();
        l_(k, k) = std::sqrt(pivot);
        rows_.push_back(i);
        in_[static_cast<std::size_t>(i)] = 1;
        return true;
    }

    void remove(std::size_t pos) {
        std::vector<Eigen::Index> keep = rows_;
        keep.erase(keep.begin() + static_cast<std::ptrdiff_t>(pos));
        clear();
        for (auto i : keep) add(i);
    }

    void clear() {
        for (auto i : rows_) in_[static_cast<std::size_t>(i)] = 0;
        rows_.clear();
    }

    // Solves P_WW mu = rhs.
    Vector solve(Vector rhs) const {
        const auto k = static_cast<Eigen::Index>(rows_.size());
        if (k == 0) return rhs;
        const auto l = l_.topLeftCorner(k, k);
        l.triangularView<Eigen::Lower>().solveInPlace(rhs);
        l.transpose().triangularView<Eigen::Upper>().solveInPlace(rhs);
        return rhs;
    }

private:
    static constexpr double kDependenceTol = 1e-10;
    const Matrix& p_;
    Matrix l_;
    std::vector<char> in_;
    std::vector<Eigen::Index> rows_;
};

}  // namespace

QpSolution ActiveSetSolver::solve(const Vector& f, const Vector& b, const Vector* x0,
                                  const std::vector<Eigen::Index>* working) const {
    const auto n = h_.rows();
    const auto m = a_.rows();
    if (f.size() != n) throw DimensionError("active set: f has the wrong size");
    if (b.size() != m) throw DimensionError("active set: b has the wrong size");

    const Vector x_free = -h_llt_.solve(f);
    const double tol = 1e-12 * (1.0 + (m > 0 ? b.cwiseAbs().maxCoeff() : 0.0));
    QpSolution sol;
    sol.multipliers = Vector::Zero(m);
    if (m == 0 || (a_ * x_free - b).maxCoeff() <= tol) {
        sol.x = x_free;
        return sol;
    }

    Vector x = x0 != nullptr && x0->size() == n ? *x0 : Vector::Zero(n);
    Vector ax = a_ * x;
    if ((ax - b).maxCoeff() > tol) {
        x.setZero();
        ax.setZero();
        if ((-b).maxCoeff() > tol) {
            throw InfeasibleProblemError("active set: no feasible starting point");
        }
    }

    // Initial working set: the hinted rows first, then every other row active at x,
    // keeping only a linearly independent subset.
    const Vector d = b - a_ * x_free;
    WorkingSet w(p_, n);
    auto active_at_x = [&](Eigen::Index i) { return std::abs(ax(i) - b(i)) <= tol; };
    if (working != nullptr) {
        for (auto i : *working) {
            if (i >= 0 && i < m && active_at_x(i)) w.add(i);
        }
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        if (active_at_x(i)) w.add(i);
    }

    Vector mu;
    std::vector<char> skip(static_cast<std::size_t>(m), 0);
    sol.converged = false;
    for (int it = 1; it <= max_iterations_; ++it) {
        sol.iterations = it;
        const auto& rows = w.rows();
        const auto k = static_cast<Eigen::Index>(rows.size());
        Vector rhs(k);
        for (Eigen::Index r = 0; r < k; ++r) rhs(r) = -d(rows[static_cast<std::size_t>(r)]);
        mu = w.solve(rhs);
        Vector target = x_free;
        for (Eigen::Index r = 0; r < k; ++r) target.noalias() -= mu(r) * hinv_at_.col(rows[static_cast<std::size_t>(r)]);
        const Vector step = target - x;

        if (step.cwiseAbs().maxCoeff() <= 1e-11 * (1.0 + x.cwiseAbs().maxCoeff())) {
            x = target;
            ax = a_ * x;
            std::size_t worst = rows.size();
            double most_negative = -1e-12 * (1.0 + (k > 0 ? mu.cwiseAbs().maxCoeff() : 0.0));
            for (Eigen::Index r = 0; r < k; ++r) {
                if (mu(r) < most_negative) {
                    most_negative = mu(r);
                    worst = static_cast<std::size_t>(r);
                }
            }
            if (worst == rows.size()) {
                sol.converged = true;
                break;
            }
            w.remove(worst);
            continue;
        }

        const Vector a_step = a_ * step;
        const double step_tol = 1e-14 * (1.0 + step.cwiseAbs().maxCoeff());
        std::fill(skip.begin(), skip.end(), 0);
        double alpha = 1.0;
        for (;;) {
            alpha = 1.0;
            Eigen::Index blocking = -1;
            for (Eigen::Index i = 0; i < m; ++i) {
                if (w.contains(i) || skip[static_cast<std::size_t>(i)] || a_step(i) <= step_tol) continue;
                const double ratio = std::max(0.0, b(i) - ax(i)) / a_step(i);
                if (ratio < alpha) {
                    alpha = ratio;
                    blocking = i;
                }
            }
            if (blocking < 0 || w.add(blocking)) break;
            // Dependent on the working set: it cannot really block this direction.
            skip[static_cast<std::size_t>(blocking)] = 1;
        }
        x.noalias() += alpha * step;
        ax.noalias() += alpha * a_step;
    }

    sol.x = x;
    const auto& rows = w.rows();
    for (std::size_t r = 0; r < rows.size() && static_cast<Eigen::Index>(r) < mu.size(); ++r) {
        sol.multipliers(rows[r]) = std::max(0.0, mu(static_cast<Eigen::Index>(r)));
    }
    sol.active = rows;
    const Vector slack = a_ * x - b;
    double res = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        res = std::max(res, std::max(0.0, slack(i)));
        res = std::max(res, std::abs(sol.multipliers(i) * slack(i)));
    }
    sol.kkt_residual = res;
    return sol;
}

QpSolution solve_qp(const QpProblem& prob, int max_iterations, double tolerance) {
    return solve_qp(prob, QpMethod::Hildreth, max_iterations, tolerance);
}

QpSolution solve_qp(const QpProblem& prob, QpMethod method, int max_iterations, double tolerance) {
    prob.validate();
    QpSolution sol;
    if (method == QpMethod::Hildreth) {
        sol = HildrethSolver(prob.h, prob.a, max_iterations, tolerance).solve(prob.f, prob.b);
    } else {
        sol = ActiveSetSolver(prob.h, prob.a, max_iterations).solve(prob.f, prob.b);
    }
    sol.kkt_residual = kkt_residual(prob, sol.x, sol.multipliers);
    return sol;
}

std::string to_string(QpMethod method) { return method == QpMethod::Hildreth ? "hildreth" : "active_set"; }

DiscreteStateSpace mpc_base_model(const StateSpace& plant, const ActuatorParams& actuator, const MpcParams& params) {
    plant.validate();
    if (plant.inputs() != 1 || plant.outputs() != 1) {
        throw DimensionError("mpc: plant must be SISO");
    }
    if (!params.lag_in_model || actuator.lag_free) {
        return zoh_discretize(plant, params.ts);
    }
    const auto n = plant.states();
    StateSpace series;
    series.A = Matrix::Zero(n + 1, n + 1);
    series.A.topLeftCorner(n, n) = plant.A;
    series.A.topRightCorner(n, 1) = plant.B;
    series.A(n, n) = -1.0 / actuator.tau;
    series.B = Matrix::Zero(n + 1, 1);
    series.B(n, 0) = 1.0 / actuator.tau;
    series.C = Matrix::Zero(1, n + 1);
    series.C.leftCols(n) = plant.C;
    return zoh_discretize(series, params.ts);
}

MpcController::MpcController(const StateSpace& plant, const ActuatorParams& actuator, MpcParams params)
    : params_(params) {
    params_.validate();
    actuator.validate();
    base_ = mpc_base_model(plant, actuator, params_);
    pred_ = build_prediction(base_, params_.ny, params_.nu);
    h_ = 2.0 * (pred_.g.transpose() * pred_.g + params_.lambda * Matrix::Identity(params_.nu, params_.nu));
    a_ = increment_constraint_matrix(params_.nu);
    if (params_.solver == QpMethod::Hildreth) {
        hildreth_ = std::make_shared<const HildrethSolver>(h_, a_, params_.max_iterations, params_.tolerance);
    } else {
        active_set_ = std::make_shared<const ActiveSetSolver>(h_, a_, params_.max_iterations);
    }
    h_llt_.compute(h_);
    reset();
}

void MpcController::reset() {
    u_prev_ = 0.0;
    warm_ = Vector::Zero(a_.rows());
    plan_ = Vector::Zero(params_.nu);
    working_.clear();
    last_iterations_ = 0;
}

Vector MpcController::augmented_state(const Observation& obs) const {
    const auto n_base = base_.states();
    Vector x(n_base + 1);
    const auto n_p = static_cast<Eigen::Index>(obs.x_p.size());
    if (n_p != n_base && n_p + 1 != n_base) {
        throw DimensionError("mpc: observed plant state does not match the prediction model");
    }
    for (Eigen::Index i = 0; i < n_p; ++i) x(i) = obs.x_p[static_cast<std::size_t>(i)];
    if (n_p + 1 == n_base) x(n_p) = obs.u_ac;
    x(n_base) = u_prev_;
    return x;
}

MpcController::Step MpcController::step(const Vector& x_aug, const Vector& r_traj) {
    if (x_aug.size() != pred_.phi.cols()) throw DimensionError("mpc: x_aug has the wrong size");
    if (r_traj.size() != params_.ny) throw DimensionError("mpc: r_traj must have Ny entries");
    if (std::abs(u_prev_) > params_.u_max + 1e-12) {
        throw InfeasibleProblemError("mpc: previous input violates the amplitude limit");
    }
    const Vector f = 2.0 * pred_.g.transpose() * (pred_.phi * x_aug - r_traj);
    const Vector b = increment_constraint_bounds(params_.nu, u_prev_, params_.u_max, params_.du_max);

    Step out;
    const int nu = params_.nu;
    if (hildreth_) {
        out.qp = hildreth_->solve(f, b, &warm_);
        Vector shifted = Vector::Zero(warm_.size());
        for (int blk = 0; blk < 4; ++blk) {
            for (int j = 0; j + 1 < nu; ++j) shifted(blk * nu + j) = out.qp.multipliers(blk * nu + j + 1);
        }
        warm_ = shifted;
    } else {
        // Start from the cheaper of the shifted plan and the clamped unconstrained plan.
        const Vector x_free = -h_llt_.solve(f);
        Vector clamped(nu);
        double u = u_prev_;
        for (int j = 0; j < nu; ++j) {
            const double next = std::clamp(u + std::clamp(x_free(j), -params_.du_max, params_.du_max), -params_.u_max,
                                           params_.u_max);
            clamped(j) = next - u;
            u = next;
        }
        auto cost = [&](const Vector& x) { return 0.5 * x.dot(h_ * x) + f.dot(x); };
        if (cost(clamped) < cost(plan_)) {
            plan_ = clamped;
            working_.clear();
        }
        out.qp = active_set_->solve(f, b, &plan_, &working_);
        // Next start: the rest of this plan, which stays feasible after u_prev advances.
        plan_.head(nu - 1) = out.qp.x.tail(nu - 1);
        plan_(nu - 1) = 0.0;
        working_.clear();
        for (auto i : out.qp.active) {
            if (i % nu != 0) working_.push_back(i - 1);
        }
    }
    last_iterations_ = out.qp.iterations;

    const double du = std::clamp(out.qp.x(0), -params_.du_max, params_.du_max);
    out.u_c = std::clamp(u_prev_ + du, -params_.u_max, params_.u_max);
    u_prev_ = out.u_c;
    return out;
}

double MpcController::compute(const Observation& obs) {
    const Vector x_aug = augmented_state(obs);
    Vector r_traj(params_.ny);
    if (params_.preview) {
        if (obs.r_preview.size() != static_cast<std::size_t>(params_.ny)) {
            throw DimensionError("mpc: preview window must have Ny samples");
        }
        for (int i = 0; i < params_.ny; ++i) r_traj(i) = obs.r_preview[static_cast<std::size_t>(i)];
    } else {
        r_traj.setConstant(obs.r);
    }
    return step(x_aug, r_traj).u_c;
}

}  // namespace awbench
