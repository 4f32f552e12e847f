#include "awbench/control_math.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "awbench/errors.hpp"

namespace awbench {

namespace {

void require_finite(const Matrix& m, const char* name) {
    if (!m.allFinite()) {
        throw ValidationError(std::string(name) + " has non-finite entries");
    }
}

void require_square(const Matrix& m, const char* what) {
    if (m.rows() != m.cols() || m.rows() < 1) {
        std::ostringstream msg;
        msg << what << ": expected a non-empty square matrix, got " << m.rows() << "x" << m.cols();
        throw DimensionError(msg.str());
    }
}

double inf_norm(const Matrix& m) { return m.cwiseAbs().rowwise().sum().maxCoeff(); }

}  // namespace

void StateSpace::validate() const {
    require_square(A, "StateSpace::A");
    if (B.rows() != A.rows() || B.cols() < 1) {
        throw DimensionError("StateSpace: B must have as many rows as A");
    }
    if (C.cols() != A.cols() || C.rows() < 1) {
        throw DimensionError("StateSpace: C must have as many columns as A");
    }
    require_finite(A, "A");
    require_finite(B, "B");
    require_finite(C, "C");
}

void DiscreteStateSpace::validate() const {
    StateSpace{Ad, Bd, C}.validate();
    if (!(Ts > 0.0) || !std::isfinite(Ts)) {
        throw ValidationError("DiscreteStateSpace: Ts must be > 0");
    }
}

StateSpace remus_yaw_model() {
    StateSpace sys;
    sys.A = Matrix{{0.0, 1.0}, {0.0, -2.16}};
    sys.B = Matrix{{0.0}, {1.98}};
    sys.C = Matrix{{1.0, 0.0}};
    return sys;
}

Matrix mat_exp(const Matrix& m, const NumericTolerances& tol) {
    require_square(m, "mat_exp");
    require_finite(m, "mat_exp input");

    const double norm = inf_norm(m);
    int squarings = 0;
    if (norm > tol.expm_scaled_norm) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / tol.expm_scaled_norm)));
    }
    const Matrix scaled = m / std::ldexp(1.0, squarings);

    const auto n = m.rows();
    Matrix result = Matrix::Identity(n, n);
    Matrix term = Matrix::Identity(n, n);
    for (int k = 1; k < 64; ++k) {
        term = term * scaled / static_cast<double>(k);
        result += term;
        if (inf_norm(term) <= tol.expm_series_term * inf_norm(result)) {
            break;
        }
    }
    for (int i = 0; i < squarings; ++i) {
        result = result * result;
    }
    return result;
}

DiscreteStateSpace zoh_discretize(const StateSpace& sys, double ts, const NumericTolerances& tol) {
    sys.validate();
    if (!(ts > 0.0) || !std::isfinite(ts)) {
        throw ValidationError("zoh_discretize: Ts must be > 0");
    }
    const auto n = sys.states();
    const auto m = sys.inputs();

    Matrix block = Matrix::Zero(n + m, n + m);
    block.topLeftCorner(n, n) = sys.A * ts;
    block.topRightCorner(n, m) = sys.B * ts;
    const Matrix e = mat_exp(block, tol);

    DiscreteStateSpace d;
    d.Ad = e.topLeftCorner(n, n);
    d.Bd = e.topRightCorner(n, m);
    d.C = sys.C;
    d.Ts = ts;
    return d;
}

Matrix solve_lyapunov(const Matrix& a, const Matrix& q) {
    require_square(a, "solve_lyapunov A");
    if (q.rows() != a.rows() || q.cols() != a.cols()) {
        throw DimensionError("solve_lyapunov: Q must match A");
    }
    const auto n = a.rows();
    const Matrix eye = Matrix::Identity(n, n);

    // vec(A^T X + X A) = (I (x) A^T + A^T (x) I) vec(X), column-major vec.
    Matrix kron(n * n, n * n);
    const Matrix at = a.transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            kron.block(i * n, j * n, n, n) = eye(i, j) * at + at(i, j) * eye;
        }
    }
    const Vector rhs = -Eigen::Map<const Vector>(Matrix(q).data(), n * n);
    Eigen::FullPivLU<Matrix> lu(kron);
    if (!lu.isInvertible()) {
        throw StabilizabilityError("solve_lyapunov: operator is singular (A has eigenvalues summing to zero)");
    }
    const Vector sol = lu.solve(rhs);
    Matrix x = Eigen::Map<const Matrix>(sol.data(), n, n);
    return 0.5 * (x + x.transpose());
}

double care_residual(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r, const Matrix& p) {
    const Matrix rinv_bt = r.ldlt().solve(b.transpose());
    const Matrix res = a.transpose() * p + p * a - p * b * rinv_bt * p + q;
    return res.norm();
}

namespace {

// Bass' construction: for beta above the spectral radius of A the gain
// B^T Z^-1 moves every closed-loop eigenvalue left of -beta.
Matrix stabilizing_seed(const Matrix& a, const Matrix& b, const NumericTolerances& tol) {
    const auto n = a.rows();
    if (is_hurwitz(a, tol)) {
        return Matrix::Zero(b.cols(), n);
    }
    const double base = inf_norm(a) + 1.0;
    for (double shift : {1.0, 2.0, 4.0, 8.0}) {
        const Matrix shifted = -(a + shift * base * Matrix::Identity(n, n)).transpose();
        Matrix z;
        try {
            z = solve_lyapunov(shifted, 2.0 * b * b.transpose());
        } catch (const StabilizabilityError&) {
            continue;
        }
        Eigen::FullPivLU<Matrix> lu(z);
        if (!lu.isInvertible()) {
            continue;
        }
        Matrix k0 = b.transpose() * lu.inverse();
        if (is_hurwitz(a - b * k0, tol)) {
            return k0;
        }
    }
    throw StabilizabilityError("solve_care: no stabilizing initial gain found; (A, B) is not stabilizable");
}

}  // namespace

RiccatiSolution solve_care(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                           const NumericTolerances& tol) {
    require_square(a, "solve_care A");
    require_square(q, "solve_care Q");
    require_square(r, "solve_care R");
    if (b.rows() != a.rows() || q.rows() != a.rows() || r.rows() != b.cols()) {
        throw DimensionError("solve_care: inconsistent A, B, Q, R shapes");
    }
    require_finite(a, "A");
    require_finite(b, "B");
    require_finite(q, "Q");
    require_finite(r, "R");
    if (a.rows() > static_cast<Eigen::Index>(tol.routh_max_order)) {
        throw UnsupportedDimensionError("solve_care: closed-loop verification supports n <= 4");
    }
    Eigen::LDLT<Matrix> r_ldlt(r);
    if (r_ldlt.info() != Eigen::Success || !r_ldlt.isPositive() || r_ldlt.vectorD().minCoeff() <= 0.0) {
        throw ValidationError("solve_care: R must be positive definite");
    }

    Matrix k = stabilizing_seed(a, b, tol);
    RiccatiSolution sol;
    double residual = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= tol.care_max_iterations; ++it) {
        const Matrix closed = a - b * k;
        Matrix p = solve_lyapunov(closed, q + k.transpose() * r * k);
        k = r_ldlt.solve(b.transpose() * p);
        residual = care_residual(a, b, q, r, p);
        sol.P = std::move(p);
        sol.iterations = it;
        if (residual <= tol.care_residual) {
            break;
        }
    }
    sol.K = k;
    sol.residual = residual;
    if (!(residual <= tol.care_residual)) {
        throw ConvergenceError("solve_care: Newton-Kleinman iteration did not reach the residual tolerance",
                               residual);
    }
    if (!is_hurwitz(a - b * sol.K, tol)) {
        throw StabilizabilityError("solve_care: closed loop A - B K is not Hurwitz");
    }
    return sol;
}

StateSpace lqi_augment(const StateSpace& plant) {
    plant.validate();
    if (plant.inputs() != 1 || plant.outputs() != 1) {
        throw DimensionError("lqi_augment: plant must be SISO");
    }
    const auto n = plant.states();
    StateSpace aug;
    aug.A = Matrix::Zero(n + 1, n + 1);
    aug.A.block(0, 1, 1, n) = -plant.C;
    aug.A.bottomRightCorner(n, n) = plant.A;
    aug.B = Matrix::Zero(n + 1, 1);
    aug.B.bottomRows(n) = plant.B;
    aug.C = Matrix::Zero(1, n + 1);
    aug.C.rightCols(n) = plant.C;
    return aug;
}

LqiGains lqi_gains(const StateSpace& plant, const Matrix& q, const Matrix& r, const NumericTolerances& tol) {
    LqiGains g;
    g.augmented = lqi_augment(plant);
    if (q.rows() != g.augmented.states() || q.cols() != g.augmented.states()) {
        throw DimensionError("lqi_gains: Q must be (n+1)x(n+1)");
    }
    g.care = solve_care(g.augmented.A, g.augmented.B, q, r, tol);
    g.k_x = g.care.K;
    g.k_i = g.k_x(0, 0);
    g.k_xp = g.k_x.rightCols(g.k_x.cols() - 1);
    return g;
}

std::vector<double> characteristic_polynomial(const Matrix& m) {
    require_square(m, "characteristic_polynomial");
    const auto n = m.rows();
    std::vector<double> c(static_cast<std::size_t>(n) + 1, 0.0);
    c[0] = 1.0;
    Matrix mk = Matrix::Zero(n, n);
    const Matrix eye = Matrix::Identity(n, n);
    for (Eigen::Index k = 1; k <= n; ++k) {
        mk = m * mk + c[static_cast<std::size_t>(k - 1)] * eye;
        c[static_cast<std::size_t>(k)] = -(m * mk).trace() / static_cast<double>(k);
    }
    return c;
}

bool routh_hurwitz(std::span<const double> coefficients) {
    if (coefficients.empty() || coefficients.front() == 0.0) {
        throw ValidationError("routh_hurwitz: leading coefficient must be nonzero");
    }
    const std::size_t degree = coefficients.size() - 1;
    if (degree == 0) {
        return true;
    }
    const double sign = coefficients.front() > 0.0 ? 1.0 : -1.0;
    const std::size_t width = degree / 2 + 1;

    std::vector<std::vector<double>> rows(degree + 1, std::vector<double>(width + 1, 0.0));
    for (std::size_t i = 0; i <= degree; ++i) {
        rows[i % 2][i / 2] = sign * coefficients[i];
    }
    for (std::size_t i = 2; i <= degree; ++i) {
        const double pivot = rows[i - 1][0];
        if (!(pivot > 0.0)) {
            return false;
        }
        for (std::size_t j = 0; j < width; ++j) {
            rows[i][j] = (pivot * rows[i - 2][j + 1] - rows[i - 2][0] * rows[i - 1][j + 1]) / pivot;
        }
    }
    for (const auto& row : rows) {
        if (!(row[0] > 0.0)) {
            return false;
        }
    }
    return true;
}

bool is_hurwitz(const Matrix& m, const NumericTolerances& tol) {
    require_square(m, "is_hurwitz");
    if (m.rows() > static_cast<Eigen::Index>(tol.routh_max_order)) {
        throw UnsupportedDimensionError("is_hurwitz: only n <= 4 is supported");
    }
    const auto coeffs = characteristic_polynomial(m);
    return routh_hurwitz(coeffs);
}

}  // namespace awbench
