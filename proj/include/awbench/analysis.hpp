#pragma once

#include <memory>
#include <optional>

#include "awbench/actuation.hpp"
#include "awbench/control_math.hpp"
#include "awbench/controllers.hpp"
#include "awbench/sim_engine.hpp"

namespace awbench {

/// Time-normalised tracking and control-effort criteria.
struct TrackingMetrics {
    double ise = 0.0;    ///< deg^2
    double iace = 0.0;   ///< deg
    double iacer = 0.0;  ///< deg/s
};

/// Trapezoidal integrals at Ts divided by Tf. u_ac rate is a first difference.
TrackingMetrics compute_metrics(const SimLog& log);

struct InstabilityRule {
    /// Tail of the final segment that is inspected.
    double tail_fraction = 0.25;
    /// Allowed |e| in the tail as a fraction of the final step amplitude.
    double settle_fraction = 0.2;
};

/// Diverged, non-finite, or max |e| over the tail of the final segment above
/// settle_fraction times the final step.
bool detect_instability(const SimLog& log, const Scenario& scenario, const InstabilityRule& rule = {});

/// True when in every segment |e| enters band * |step| and stays there for at
/// least `hold` seconds before the next setpoint change.
bool settles_each_segment(const SimLog& log, const Scenario& scenario, double band = 0.02, double hold = 1.0);

/// Time after the segment start at which |e| last leaves the band, per segment.
/// A negative entry means the band was never reached.
std::vector<double> segment_settling_times(const SimLog& log, const Scenario& scenario, double band = 0.02);

/// Everything one closed-loop run needs.
struct BenchmarkSetup {
    StateSpace plant = remus_yaw_model();
    std::shared_ptr<const Controller> controller;
    ActuatorParams actuator;
    Scenario scenario = Scenario::benchmark_default();
    SimConfig sim;
    InstabilityRule rule;

    void validate() const;
    SimLog run() const;
    SimLog run_perturbed(double gain_scale, double injected_delay) const;
};

struct MarginResult {
    double value = 0.0;
    bool exceeds_cap = false;
    /// Whether the coarse pre-sweep found a single stable/unstable switch.
    bool monotone = true;
    int runs = 0;
};

struct MarginSearch {
    double cap = 10.5;
    double tolerance = 0.05;
    /// Number of equally spaced points in the monotonicity pre-sweep.
    int coarse_points = 12;
    /// 0 picks std::thread::hardware_concurrency().
    unsigned threads = 0;
};

/// Largest gain_scale in [1, cap] with a stable run (tolerance in gain units).
MarginResult estimate_gain_margin(const BenchmarkSetup& setup, const MarginSearch& search = {});

/// Largest injected delay in [0, cap] with a stable run, on the Ts grid.
/// search.tolerance is ignored; the resolution is one control period.
MarginResult estimate_delay_margin(const BenchmarkSetup& setup, MarginSearch search = {3.0, 0.01, 12, 0});

/// Exhaustive sweep oracles: last stable point on a uniform grid before the first unstable one.
MarginResult sweep_gain_margin(const BenchmarkSetup& setup, double cap, double step, unsigned threads = 0);
MarginResult sweep_delay_margin(const BenchmarkSetup& setup, double cap, unsigned threads = 0);

}  // namespace awbench
