#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "awbench/errors.hpp"
#include "awbench/mpc.hpp"
#include "awbench/sim_engine.hpp"
#include "mpc_oracles.hpp"

using namespace awbench;
using namespace awbench::oracle;

namespace {

DiscreteStateSpace scalar_integrator() {
    DiscreteStateSpace d;
    d.Ad = Matrix::Identity(1, 1);
    d.Bd = Matrix::Identity(1, 1);
    d.C = Matrix::Identity(1, 1);
    d.Ts = 1.0;
    return d;
}

MpcParams small_params(int ny, int nu) {
    MpcParams p;
    p.ny = ny;
    p.nu = nu;
    return p;
}

}  // namespace

TEST_CASE("prediction of the scalar integrator") {
    const auto pred = build_prediction(scalar_integrator(), 3, 3);
    CHECK(pred.g(0, 0) == 1.0);
    CHECK(pred.g(1, 0) == 2.0);
    CHECK(pred.g(2, 0) == 3.0);
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) CHECK(pred.g(i, j) == 0.0);
    const auto one = build_prediction(scalar_integrator(), 1, 1);
    CHECK(one.g(0, 0) == 1.0);
    CHECK_THROWS_AS(build_prediction(scalar_integrator(), 2, 3), ValidationError);
}

TEST_CASE("prediction matches step-by-step simulation") {
    const auto base = mpc_base_model(remus_yaw_model(), ActuatorParams{}, MpcParams{});
    const int ny = 30, nu = 10;
    const auto pred = build_prediction(base, ny, nu);
    const auto inc = increment_form(base);
    std::mt19937 rng(2);
    std::normal_distribution<double> g(0.0, 1.0);
    Vector x(base.states());
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = g(rng);
    const double u_prev = 3.0;
    Vector du(nu);
    for (int i = 0; i < nu; ++i) du(i) = g(rng);
    Vector x_aug(x.size() + 1);
    x_aug << x, u_prev;

    const Vector y = simulate_increments(base, x, u_prev, du, ny);
    CHECK((pred.phi * x_aug + pred.g * du - y).cwiseAbs().maxCoeff() < 1e-10);
    const Vector free = simulate_increments(base, x, u_prev, Vector::Zero(nu), ny);
    CHECK((pred.phi * x_aug - free).cwiseAbs().maxCoeff() < 1e-10);

    Matrix c_pow = inc.C;
    for (int i = 0; i < ny; ++i) {
        c_pow = c_pow * inc.Ad;
        CHECK((pred.phi.row(i) - c_pow).cwiseAbs().maxCoeff() < 1e-13);
    }
}

TEST_CASE("build_qp examples") {
    PredictionMatrices pred;
    pred.phi = Matrix::Zero(1, 1);
    pred.g = Matrix::Identity(1, 1);
    MpcParams p = small_params(1, 1);
    p.u_max = 100.0;
    p.du_max = 100.0;
    Vector x(1);
    x << 0.0;
    Vector r(1);
    r << 1.0;  // prediction error -1
    const auto qp = build_qp(pred, x, r, 0.0, p);
    CHECK((-qp.h.llt().solve(qp.f))(0) == doctest::Approx(1.0 / 1.1).epsilon(1e-14));

    const auto base = mpc_base_model(remus_yaw_model(), ActuatorParams{}, MpcParams{});
    const auto big = build_prediction(base, 20, 5);
    Vector xa = Vector::Zero(base.states() + 1);
    xa(0) = 3.0;
    const Vector free = big.phi * xa;
    const auto at_free = build_qp(big, xa, free, 0.0, small_params(20, 5));
    CHECK(at_free.f.cwiseAbs().maxCoeff() == 0.0);
    CHECK(solve_qp(at_free).x.cwiseAbs().maxCoeff() == 0.0);

    MpcParams heavy = small_params(20, 5);
    heavy.lambda = 1e9;
    const auto damped = build_qp(big, xa, Vector::Constant(20, 10.0), 0.0, heavy);
    CHECK(solve_qp(damped).x.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("solve_qp small cases") {
    QpProblem p;
    p.h = 2.0 * Matrix::Identity(1, 1);
    p.f = Vector::Constant(1, -2.0);  // (du - 1)^2
    p.a = increment_constraint_matrix(1);
    p.b = increment_constraint_bounds(1, 0.0, 20.0, 0.3);
    for (auto method : {QpMethod::Hildreth, QpMethod::ActiveSet}) {
        CHECK(solve_qp(p, method).x(0) == doctest::Approx(0.3).epsilon(1e-12));
        QpProblem zero = p;
        zero.f.setZero();
        CHECK(solve_qp(zero, method).x(0) == 0.0);
    }
}

TEST_CASE("random QPs match exhaustive enumeration") {
    std::mt19937 rng(2024);
    int active_cases = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto p = random_increment_qp(rng, 5);
        const Vector oracle = enumerate_qp(p);
        REQUIRE(oracle.size() == 5);
        for (auto method : {QpMethod::Hildreth, QpMethod::ActiveSet}) {
            const auto s = solve_qp(p, method);
            INFO("trial " << trial << " " << to_string(method) << " it " << s.iterations << " conv " << s.converged);
            CHECK((s.x - oracle).cwiseAbs().maxCoeff() <= 1e-6);
            CHECK((p.a * s.x - p.b).maxCoeff() <= 1e-8);
            CHECK(s.kkt_residual <= 1e-6);
            CHECK(p.cost(s.x) <= p.cost(Vector::Zero(5)) + 1e-12);
        }
        if ((p.a * oracle - p.b).maxCoeff() > -1e-9) ++active_cases;
    }
    CHECK(active_cases > 50);
}

TEST_CASE("Hildreth warm start does not move the solution") {
    std::mt19937 rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        const auto p = random_increment_qp(rng, 8);
        const HildrethSolver solver(p.h, p.a);
        const auto cold = solver.solve(p.f, p.b);
        const auto warm = solver.solve(p.f, p.b, &cold.multipliers);
        CHECK((cold.x - warm.x).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK(warm.iterations <= cold.iterations);
    }
}

TEST_CASE("active-set warm start does not move the solution") {
    std::mt19937 rng(98);
    for (int trial = 0; trial < 20; ++trial) {
        const auto p = random_increment_qp(rng, 8);
        const ActiveSetSolver solver(p.h, p.a);
        const auto cold = solver.solve(p.f, p.b);
        const auto warm = solver.solve(p.f, p.b, &cold.x, &cold.active);
        CHECK((cold.x - warm.x).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK(warm.iterations <= 1);
    }
}

TEST_CASE("infeasible constraints are reported") {
    QpProblem p;
    p.h = Matrix::Identity(1, 1);
    p.f = Vector::Zero(1);
    p.a = Matrix(2, 1);
    p.a << 1.0, -1.0;
    p.b = Vector(2);
    p.b << -1.0, -1.0;  // x <= -1 and x >= 1
    CHECK_THROWS_AS(solve_qp(p, QpMethod::Hildreth), InfeasibleProblemError);
    CHECK_THROWS_AS(solve_qp(p, QpMethod::ActiveSet), InfeasibleProblemError);
}

TEST_CASE("both solvers agree on saturated benchmark problems") {
    const auto plant = remus_yaw_model();
    MpcParams p;
    const auto base = mpc_base_model(plant, ActuatorParams{}, p);
    const auto pred = build_prediction(base, p.ny, p.nu);
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        Vector xa(base.states() + 1);
        xa << 40.0 * u(rng), 5.0 * u(rng), 15.0 * u(rng), 0.0;
        const double u_prev = 19.0 * u(rng);
        xa(3) = u_prev;
        const auto qp = build_qp(pred, xa, Vector::Constant(p.ny, 100.0 * u(rng)), u_prev, p);
        const auto a = solve_qp(qp, QpMethod::ActiveSet);
        const auto h = solve_qp(qp, QpMethod::Hildreth);
        INFO("as it " << a.iterations << " kkt " << a.kkt_residual << " h conv " << h.converged << " h kkt " << h.kkt_residual << " costs " << qp.cost(a.x) << " " << qp.cost(h.x));
        CHECK(a.converged);
        CHECK(h.converged);
        CHECK(h.kkt_residual <= 1e-6 * (1.0 + qp.f.cwiseAbs().maxCoeff()));
        CHECK(a.kkt_residual <= 1e-6 * (1.0 + qp.f.cwiseAbs().maxCoeff()));
        CHECK((a.x - h.x).cwiseAbs().maxCoeff() <= 1e-6);
    }
}

TEST_CASE("MPC step contract") {
    const auto plant = remus_yaw_model();
    for (auto method : {QpMethod::ActiveSet, QpMethod::Hildreth}) {
        MpcParams p;
        p.solver = method;
        MpcController mpc(plant, ActuatorParams{}, p);
        const Vector x0 = Vector::Zero(4);
        CHECK(mpc.step(x0, Vector::Zero(p.ny)).u_c == 0.0);

        // Large step: the unconstrained first increment is far beyond the limit.
        mpc.reset();
        const Vector r = Vector::Constant(p.ny, 150.0);
        const auto qp = build_qp(mpc.prediction(), x0, r, 0.0, p);
        CHECK((-qp.h.llt().solve(qp.f))(0) > 0.3);
        const auto s = mpc.step(x0, r);
        INFO(to_string(method) << " it " << s.qp.iterations << " conv " << s.qp.converged);
        CHECK(s.u_c == doctest::Approx(0.3).epsilon(1e-12));
        CHECK(s.qp.x(0) == doctest::Approx(0.3).epsilon(1e-9));
        CHECK(std::abs(s.u_c) <= 20.0 + 1e-9);
    }
}

TEST_CASE("unconstrained run matches the dense least-squares controller") {
    // Small step so no constraint ever becomes active.
    const auto plant = remus_yaw_model();
    const ActuatorParams act;
    MpcParams p;
    p.ny = 60;
    p.nu = 60;
    MpcController mpc(plant, act, p);
    const auto base = mpc_base_model(plant, act, p);

    std::vector<double> r(300, 0.05);
    for (int k = 0; k < 5; ++k) r[static_cast<std::size_t>(k)] = 0.0;
    const auto oracle_u = dense_ls_inputs(base, p.ny, p.nu, p.lambda, r);

    Vector x = Vector::Zero(base.states());
    for (std::size_t k = 0; k < r.size(); ++k) {
        Vector xa(x.size() + 1);
        xa << x, mpc.u_prev();
        const auto s = mpc.step(xa, Vector::Constant(p.ny, r[k]));
        INFO("k = " << k);
        REQUIRE(s.qp.active.empty());
        REQUIRE(std::abs(s.u_c - oracle_u[k]) <= 1e-6);
        x = base.Ad * x + base.Bd * s.u_c;
    }
}

TEST_CASE("MPC parameter validation") {
    MpcParams p;
    p.nu = 121;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = MpcParams{};
    p.lambda = -1.0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    CHECK((MpcParams{}).du_max == doctest::Approx(30.0 * 0.01));
}
