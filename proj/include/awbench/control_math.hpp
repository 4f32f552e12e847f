#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace awbench {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Fixed numeric tolerances shared by the linear-algebra routines.
struct NumericTolerances {
    double care_residual = 1e-8;      ///< Frobenius norm of the CARE residual
    double symmetry = 1e-10;          ///< max |P - P^T|
    int care_max_iterations = 60;     ///< Newton-Kleinman iterations
    double expm_scaled_norm = 0.5;    ///< ||M||_inf after scaling
    double expm_series_term = 1e-16;  ///< relative size of the last Taylor term kept
    std::size_t routh_max_order = 4;
};

/// Continuous-time LTI model  x' = A x + B u,  y = C x.
struct StateSpace {
    Matrix A;
    Matrix B;
    Matrix C;

    Eigen::Index states() const { return A.rows(); }
    Eigen::Index inputs() const { return B.cols(); }
    Eigen::Index outputs() const { return C.rows(); }

    /// Throws DimensionError / ValidationError.
    void validate() const;
};

/// Zero-order-hold sampled model  x[k+1] = Ad x[k] + Bd u[k],  y = C x.
struct DiscreteStateSpace {
    Matrix Ad;
    Matrix Bd;
    Matrix C;
    double Ts = 0.0;

    Eigen::Index states() const { return Ad.rows(); }
    void validate() const;
};

struct RiccatiSolution {
    Matrix P;  ///< stabilizing solution, symmetric PSD
    Matrix K;  ///< R^-1 B^T P
    double residual = 0.0;
    int iterations = 0;
};

/// Linear-quadratic-integral gains split as K_x = [K_I | K_xp] (u = -K_x x).
struct LqiGains {
    double k_i = 0.0;  ///< first entry of K_x, acts on the error integral
    Matrix k_xp;       ///< 1 x n, acts on the plant state
    Matrix k_x;        ///< 1 x (n+1), the full CARE gain
    StateSpace augmented;
    RiccatiSolution care;
};

/// The REMUS yaw model at 1 m/s: states [psi, r] in degrees, input rudder in degrees.
StateSpace remus_yaw_model();

/// e^M by scaling and squaring around a truncated Taylor series.
Matrix mat_exp(const Matrix& m, const NumericTolerances& tol = {});

/// Exact ZOH sampling through the exponential of [[A, B], [0, 0]] * Ts.
DiscreteStateSpace zoh_discretize(const StateSpace& sys, double ts, const NumericTolerances& tol = {});

/// Solves A^T X + X A + Q = 0 through the Kronecker-product linear system.
Matrix solve_lyapunov(const Matrix& a, const Matrix& q);

/// || A^T P + P A - P B R^-1 B^T P + Q ||_F
double care_residual(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r, const Matrix& p);

/// Stabilizing CARE solution by Newton-Kleinman iteration.
RiccatiSolution solve_care(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                           const NumericTolerances& tol = {});

/// Error-integral augmentation  [e_I; x_p]' = [[0, -C], [0, A]] x + [0; B] u + [1; 0] r.
StateSpace lqi_augment(const StateSpace& plant);

LqiGains lqi_gains(const StateSpace& plant, const Matrix& q, const Matrix& r, const NumericTolerances& tol = {});

/// Monic characteristic polynomial coefficients [1, c1, ..., cn] (Faddeev-LeVerrier).
std::vector<double> characteristic_polynomial(const Matrix& m);

/// Routh-Hurwitz test on a polynomial given highest power first.
bool routh_hurwitz(std::span<const double> coefficients);

/// True iff every eigenvalue of m has a negative real part. n <= 4.
bool is_hurwitz(const Matrix& m, const NumericTolerances& tol = {});

}  // namespace awbench
