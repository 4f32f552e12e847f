#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>

#include "awbench/analysis.hpp"
#include "awbench/errors.hpp"

using namespace awbench;

namespace {

// Synthetic log on [0, tf] at ts with the given error and actuator signals; r = 0.
SimLog make_log(double tf, double ts, const std::function<double(double)>& e,
                const std::function<double(double)>& u_ac = [](double) { return 0.0; }) {
    SimLog log;
    log.tf = tf;
    log.ts = ts;
    const auto n = expected_log_length(tf, ts);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * ts;
        log.t.push_back(t);
        log.r.push_back(0.0);
        log.e.push_back(e(t));
        log.y.push_back(-e(t));
        log.ydot.push_back(0.0);
        log.u_c.push_back(u_ac(t));
        log.u_ac.push_back(u_ac(t));
    }
    return log;
}

const Scenario kStep{{{0.0, 0.0}, {1.0, 150.0}}, 80.0};

BenchmarkSetup pd_setup(double scale = 1.0) {
    BenchmarkSetup s;
    PdAwParams p;
    p.kp *= scale;
    p.kd *= scale;
    s.controller = std::make_shared<PdAwController>(p);
    return s;
}

BenchmarkSetup lqi_setup() {
    BenchmarkSetup s;
    Matrix q = Matrix::Zero(3, 3);
    q.diagonal() << 1000.0, 50.0, 25.0;
    s.controller = std::make_shared<LqiAwController>(
        LqiAwParams::design(s.plant, q, Matrix::Identity(1, 1), 4.0), 0.01, AlgebraicLoop::Delayed);
    return s;
}

}  // namespace

TEST_CASE("metric examples") {
    auto m = compute_metrics(make_log(80.0, 0.01, [](double) { return 2.0; }));
    CHECK(m.ise == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(m.iace == 0.0);
    CHECK(m.iacer == 0.0);

    m = compute_metrics(make_log(80.0, 0.01, [](double) { return 0.0; }, [](double t) { return t; }));
    CHECK(m.ise == 0.0);
    CHECK(m.iace == doctest::Approx(40.0).epsilon(1e-12));
    CHECK(m.iacer == doctest::Approx(1.0).epsilon(1e-12));

    m = compute_metrics(make_log(80.0, 0.01, [](double) { return 0.0; }));
    CHECK(m.ise == 0.0);
    CHECK(m.iace == 0.0);
    CHECK(m.iacer == 0.0);

    // Trapezoid on a parabola: e = t over [0, 2] gives 8/3 + ts^2 * 2 / 6 before normalisation.
    m = compute_metrics(make_log(2.0, 0.01, [](double t) { return t; }));
    CHECK(m.ise == doctest::Approx((8.0 / 3.0 + 0.01 * 0.01 * 2.0 / 6.0) / 2.0).epsilon(1e-12));
}

TEST_CASE("metrics vanish only for vanishing signals") {
    auto log = make_log(80.0, 0.01, [](double) { return 0.0; });
    log.e[4000] = 1e-3;
    log.u_ac[4000] = 1e-3;
    const auto m = compute_metrics(log);
    CHECK(m.ise > 0.0);
    CHECK(m.iace > 0.0);
    CHECK(m.iacer > 0.0);
}

TEST_CASE("metrics of a diverged log are unavailable") {
    auto log = make_log(80.0, 0.01, [](double) { return 1.0; });
    log.diverged = true;
    CHECK_THROWS_AS(compute_metrics(log), MetricsUnavailableError);
}

TEST_CASE("metrics are reproducible across reruns") {
    const auto setup = pd_setup();
    const auto a = compute_metrics(setup.run());
    const auto b = compute_metrics(setup.run());
    CHECK(a.ise == b.ise);
    CHECK(a.iace == b.iace);
    CHECK(a.iacer == b.iacer);
}

TEST_CASE("instability rule on synthetic logs") {
    // Decaying error after the step.
    auto decaying = make_log(80.0, 0.01, [](double t) { return t < 1.0 ? 0.0 : 150.0 * std::exp(-(t - 1.0)); });
    CHECK_FALSE(detect_instability(decaying, kStep));

    // Oscillation growing geometrically, still below the divergence guard.
    auto growing = make_log(80.0, 0.01, [](double t) { return 0.5 * std::exp(0.08 * t) * std::sin(3.0 * t); });
    CHECK_FALSE(growing.diverged);
    CHECK(detect_instability(growing, kStep));

    // Sustained limit cycle at 30% of the step around the setpoint.
    auto cycle = make_log(80.0, 0.01, [](double t) { return 0.3 * 150.0 * std::sin(2.0 * t); });
    CHECK(detect_instability(cycle, kStep));
    // Same cycle at 10% of the step is inside the tolerance.
    auto small = make_log(80.0, 0.01, [](double t) { return 0.1 * 150.0 * std::sin(2.0 * t); });
    CHECK_FALSE(detect_instability(small, kStep));

    auto flagged = decaying;
    flagged.diverged = true;
    CHECK(detect_instability(flagged, kStep));
    auto nan = decaying;
    nan.y[100] = std::numeric_limits<double>::quiet_NaN();
    CHECK(detect_instability(nan, kStep));
    CHECK(detect_instability(SimLog{}, kStep));
}

TEST_CASE("nominal benchmark runs are stable and settle") {
    for (const auto& setup : {pd_setup(), lqi_setup()}) {
        const auto log = setup.run();
        CHECK_FALSE(detect_instability(log, setup.scenario, setup.rule));
        CHECK(settles_each_segment(log, setup.scenario));
        const auto times = segment_settling_times(log, setup.scenario);
        CHECK(times.size() == setup.scenario.segments.size());
    }
}

TEST_CASE("unstable nominal loop is a precondition error") {
    BenchmarkSetup s;
    s.controller = std::make_shared<PdAwController>(PdAwParams{-8.0, 6.0, 4.0});
    CHECK_THROWS_AS(estimate_gain_margin(s), PreconditionError);
    CHECK_THROWS_AS(estimate_delay_margin(s), PreconditionError);
}

TEST_CASE("gain margin search agrees with the exhaustive sweep") {
    for (double scale : {1.0, 3.0}) {
        CAPTURE(scale);
        const auto setup = pd_setup(scale);
        const auto fast = estimate_gain_margin(setup);
        const auto slow = sweep_gain_margin(setup, 10.5, 0.05);
        CHECK(fast.exceeds_cap == slow.exceeds_cap);
        CHECK(std::abs(fast.value - slow.value) <= 0.05 + 1e-9);
        CHECK(fast.value >= 1.0);
    }
}

TEST_CASE("delay margin search agrees with the exhaustive sweep") {
    for (const auto& setup : {pd_setup(), lqi_setup()}) {
        const auto fast = estimate_delay_margin(setup);
        const auto slow = sweep_delay_margin(setup, 3.0);
        CHECK(fast.exceeds_cap == slow.exceeds_cap);
        CHECK(std::abs(fast.value - slow.value) <= 0.01 + 1e-9);
        CHECK(fast.value >= 0.0);
        CHECK(fast.runs < slow.runs);
    }
}

TEST_CASE("margins do not grow when PD gains are inflated") {
    double gm_prev = std::numeric_limits<double>::infinity();
    double dm_prev = std::numeric_limits<double>::infinity();
    for (double scale : {1.0, 1.5, 2.25}) {
        CAPTURE(scale);
        const auto setup = pd_setup(scale);
        const auto gm = estimate_gain_margin(setup);
        const auto dm = estimate_delay_margin(setup);
        MESSAGE("scale " << scale << " gm " << gm.value << " dm " << dm.value);
        CHECK(gm.value <= gm_prev + 1e-12);
        CHECK(dm.value <= dm_prev + 1e-12);
        gm_prev = gm.value;
        dm_prev = dm.value;
    }
}
