#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "awbench/control_math.hpp"
#include "awbench/errors.hpp"

using namespace awbench;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

// Plain Taylor sum without scaling; fine for small norms.
Matrix series_exp(const Matrix& m) {
    Matrix term = Matrix::Identity(m.rows(), m.cols());
    Matrix sum = term;
    for (int k = 1; k < 60; ++k) {
        term = term * m / static_cast<double>(k);
        sum += term;
    }
    return sum;
}

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& row : rows) {
        Eigen::Index j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

// J = int_0^T x'Qx + u'Ru dt for u = -Kx, RK4 on the state extended by J.
double simulated_cost(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r, const Matrix& k,
                      const Vector& x0, double t_end) {
    const Matrix acl = a - b * k;
    const Matrix w = q + k.transpose() * r * k;
    const auto n = acl.rows();
    auto f = [&](const Vector& z) {
        Vector dz(n + 1);
        dz.head(n) = acl * z.head(n);
        dz(n) = z.head(n).dot(w * z.head(n));
        return dz;
    };
    const double h = 1e-3;
    Vector z = Vector::Zero(n + 1);
    z.head(n) = x0;
    const int steps = static_cast<int>(std::lround(t_end / h));
    for (int i = 0; i < steps; ++i) {
        const Vector k1 = f(z);
        const Vector k2 = f(z + 0.5 * h * k1);
        const Vector k3 = f(z + 0.5 * h * k2);
        const Vector k4 = f(z + h * k3);
        z += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return z(n);
}

}  // namespace

TEST_CASE("mat_exp known values") {
    CHECK(max_abs(mat_exp(Matrix::Zero(2, 2)) - Matrix::Identity(2, 2)) == 0.0);

    const Matrix d = mat_exp(mat({{-1, 0}, {0, 2}}));
    CHECK(d(0, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    CHECK(d(1, 1) == doctest::Approx(std::exp(2.0)).epsilon(1e-14));
    CHECK(d(0, 1) == 0.0);
    CHECK(d(1, 0) == 0.0);

    const Matrix n = mat_exp(mat({{0, 1}, {0, 0}}));
    CHECK(max_abs(n - mat({{1, 1}, {0, 1}})) < 1e-15);
}

TEST_CASE("mat_exp matches an eigen-decomposition oracle up to norm 10") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        Matrix v(3, 3);
        for (int i = 0; i < 9; ++i) v(i / 3, i % 3) = u(rng);
        v += 2.0 * Matrix::Identity(3, 3);
        Vector lam(3);
        for (int i = 0; i < 3; ++i) lam(i) = 3.0 * u(rng);
        const Matrix m = v * lam.asDiagonal() * v.inverse();
        if (m.cwiseAbs().rowwise().sum().maxCoeff() > 10.0) continue;
        const Matrix oracle = v * lam.array().exp().matrix().asDiagonal() * v.inverse();
        CHECK(max_abs(mat_exp(m) - oracle) <= 1e-12 * max_abs(oracle) * 10.0);
    }
}

TEST_CASE("mat_exp(M) * mat_exp(-M) = I") {
    std::mt19937 rng(11);
    std::normal_distribution<double> g(0.0, 1.5);
    for (int trial = 0; trial < 50; ++trial) {
        Matrix m(3, 3);
        for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = g(rng);
        CHECK(max_abs(mat_exp(m) * mat_exp(-m) - Matrix::Identity(3, 3)) <= 1e-10);
    }
}

TEST_CASE("mat_exp rejects non-square input") { CHECK_THROWS_AS(mat_exp(Matrix::Zero(2, 3)), DimensionError); }

TEST_CASE("zoh of an integrator chain and a scalar lag") {
    StateSpace chain{Matrix::Zero(2, 2), Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
    const auto dz = zoh_discretize(chain, 0.001);
    CHECK(max_abs(dz.Ad - Matrix::Identity(2, 2)) == 0.0);
    CHECK(max_abs(dz.Bd - 0.001 * Matrix::Identity(2, 2)) < 1e-18);

    StateSpace lag{mat({{-1}}), mat({{1}}), mat({{1}})};
    const auto dl = zoh_discretize(lag, 1.0);
    CHECK(dl.Ad(0, 0) == doctest::Approx(0.3678794412).epsilon(1e-10));
    CHECK(dl.Bd(0, 0) == doctest::Approx(0.6321205588).epsilon(1e-10));
}

TEST_CASE("zoh of the yaw model matches the closed form") {
    const StateSpace p = remus_yaw_model();
    const double ts = 0.01, a = 2.16, b = 1.98;
    const double ea = std::exp(-a * ts);
    const auto d = zoh_discretize(p, ts);
    CHECK(std::abs(d.Ad(0, 0) - 1.0) <= 1e-12);
    CHECK(std::abs(d.Ad(0, 1) - (1.0 - ea) / a) <= 1e-12);
    CHECK(std::abs(d.Ad(1, 0)) <= 1e-12);
    CHECK(std::abs(d.Ad(1, 1) - ea) <= 1e-12);
    CHECK(std::abs(d.Bd(0, 0) - b * (ts / a - (1.0 - ea) / (a * a))) <= 1e-12);
    CHECK(std::abs(d.Bd(1, 0) - b * (1.0 - ea) / a) <= 1e-12);
    CHECK(max_abs(d.Ad - series_exp(p.A * ts)) <= 1e-12);
}

TEST_CASE("zoh rejects a non-positive period") {
    CHECK_THROWS_AS(zoh_discretize(remus_yaw_model(), 0.0), ValidationError);
}

TEST_CASE("lyapunov solution satisfies its equation") {
    const Matrix a = mat({{-1, 2, 0}, {0, -3, 1}, {0.5, 0, -2}});
    const Matrix q = mat({{2, 0, 0}, {0, 1, 0}, {0, 0, 3}});
    const Matrix x = solve_lyapunov(a, q);
    CHECK(max_abs(a.transpose() * x + x * a + q) < 1e-12);
}

TEST_CASE("scalar CARE") {
    const auto s = solve_care(mat({{0}}), mat({{1}}), mat({{1}}), mat({{1}}));
    CHECK(s.P(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.K(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("double integrator CARE") {
    const Matrix a = mat({{0, 1}, {0, 0}}), b = mat({{0}, {1}});
    const auto s = solve_care(a, b, Matrix::Identity(2, 2), mat({{1}}));
    CHECK(s.K(0, 0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(s.K(0, 1) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-10));
    // Analytic P = [[sqrt3, 1], [1, sqrt3]].
    CHECK(max_abs(s.P - mat({{std::sqrt(3.0), 1}, {1, std::sqrt(3.0)}})) < 1e-10);
    CHECK(s.residual <= 1e-8);
}

TEST_CASE("LQR gain beats random stabilising perturbations in simulated cost") {
    const Matrix a = mat({{0, 1}, {0, 0}}), b = mat({{0}, {1}});
    const Matrix q = Matrix::Identity(2, 2), r = mat({{1}});
    const auto s = solve_care(a, b, q, r);
    Vector x0(2);
    x0 << 1, 0;
    const double j_opt = simulated_cost(a, b, q, r, s.K, x0, 50.0);
    CHECK(j_opt == doctest::Approx(x0.dot(s.P * x0)).epsilon(1e-6));

    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    int tested = 0;
    while (tested < 20) {
        Matrix k = s.K;
        k(0, 0) += u(rng);
        k(0, 1) += u(rng);
        if (!is_hurwitz(a - b * k)) continue;
        ++tested;
        CHECK(j_opt <= simulated_cost(a, b, q, r, k, x0, 50.0) + 1e-9);
    }
}

TEST_CASE("benchmark LQI design") {
    const StateSpace plant = remus_yaw_model();
    Matrix q = Matrix::Zero(3, 3);
    q.diagonal() << 1000, 50, 25;
    const auto g = lqi_gains(plant, q, mat({{1}}));
    const auto& aug = g.augmented;
    CHECK(aug.A(0, 0) == 0.0);
    CHECK(aug.A(0, 1) == -1.0);
    CHECK(aug.A(0, 2) == 0.0);
    CHECK(g.care.residual <= 1e-8);
    CHECK(max_abs(g.care.P - g.care.P.transpose()) <= 1e-10);
    std::mt19937 rng(5);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        Vector x(3);
        for (int j = 0; j < 3; ++j) x(j) = n(rng);
        CHECK(x.dot(g.care.P * x) >= 0.0);
    }
    CHECK(is_hurwitz(aug.A - aug.B * g.k_x));
    CHECK(g.k_x(0, 0) == g.k_i);
    CHECK(max_abs(g.k_x.rightCols(2) - g.k_xp) == 0.0);
    CHECK(max_abs(g.k_x - g.care.K) == 0.0);
    // Integral weight sqrt(1000) fixes the integral gain magnitude exactly.
    CHECK(std::abs(g.k_i) == doctest::Approx(std::sqrt(1000.0)).epsilon(1e-8));
}

TEST_CASE("LQI on a scalar integrator") {
    const StateSpace plant{mat({{0}}), mat({{1}}), mat({{1}})};
    const auto g = lqi_gains(plant, Matrix::Identity(2, 2), mat({{1}}));
    CHECK(g.care.residual <= 1e-8);
    CHECK(is_hurwitz(g.augmented.A - g.augmented.B * g.k_x));
}

TEST_CASE("CARE reports an unstabilisable pair") {
    CHECK_THROWS_AS(solve_care(mat({{1}}), mat({{0}}), mat({{1}}), mat({{1}})), StabilizabilityError);
}

TEST_CASE("characteristic polynomial and Routh-Hurwitz") {
    const auto c = characteristic_polynomial(mat({{0, 1, 0}, {0, 0, 1}, {-1, -3, -2}}));
    REQUIRE(c.size() == 4);
    CHECK(c[0] == doctest::Approx(1.0));
    CHECK(c[1] == doctest::Approx(2.0));
    CHECK(c[2] == doctest::Approx(3.0));
    CHECK(c[3] == doctest::Approx(1.0));
    const double stable[] = {1, 2, 3, 1};
    const double unstable[] = {1, 1, 1, 3};
    CHECK(routh_hurwitz(stable));
    CHECK_FALSE(routh_hurwitz(unstable));
    CHECK(is_hurwitz(mat({{-1}})));
    CHECK_FALSE(is_hurwitz(mat({{1}})));
    CHECK(is_hurwitz(mat({{0, 1, 0}, {0, 0, 1}, {-1, -3, -2}})));
    CHECK_FALSE(is_hurwitz(remus_yaw_model().A));
    CHECK_THROWS_AS(is_hurwitz(-Matrix::Identity(5, 5)), UnsupportedDimensionError);
}
