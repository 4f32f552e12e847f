#include "awbench/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <thread>

#include "awbench/errors.hpp"

namespace awbench {

namespace {

void require_consistent(const SimLog& log) {
    const std::size_t n = log.t.size();
    if (n == 0) {
        throw ValidationError("log is empty");
    }
    for (const auto* v : {&log.r, &log.y, &log.ydot, &log.u_c, &log.u_ac, &log.e}) {
        if (v->size() != n) {
            throw DimensionError("log signals have different lengths");
        }
    }
}

double step_amplitude(const Scenario& scenario, std::size_t i) {
    const double prev = i == 0 ? 0.0 : scenario.segments[i - 1].setpoint;
    return std::abs(scenario.segments[i].setpoint - prev);
}

double segment_end(const Scenario& scenario, std::size_t i) {
    return i + 1 < scenario.segments.size() ? scenario.segments[i + 1].start_time : scenario.tf;
}

// Indices [first, last) of the log samples in segment i. The final segment includes tf.
std::pair<std::size_t, std::size_t> segment_range(const SimLog& log, const Scenario& scenario, std::size_t i) {
    constexpr double slack = 1e-9;
    const double t0 = scenario.segments[i].start_time;
    const double t1 = segment_end(scenario, i);
    const bool last = i + 1 == scenario.segments.size();
    auto first = std::lower_bound(log.t.begin(), log.t.end(), t0 - slack);
    auto end = last ? std::upper_bound(log.t.begin(), log.t.end(), t1 + slack)
                    : std::lower_bound(log.t.begin(), log.t.end(), t1 - slack);
    return {static_cast<std::size_t>(first - log.t.begin()), static_cast<std::size_t>(end - log.t.begin())};
}

unsigned worker_count(unsigned requested) {
    if (requested > 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

// Evaluates stability at every grid index in `idx`, `threads` runs at a time.
template <class Stable>
std::vector<bool> evaluate(const std::vector<int>& idx, Stable&& stable, unsigned threads) {
    std::vector<bool> out(idx.size());
    if (threads <= 1) {
        for (std::size_t i = 0; i < idx.size(); ++i) out[i] = stable(idx[i]);
        return out;
    }
    for (std::size_t begin = 0; begin < idx.size(); begin += threads) {
        const std::size_t end = std::min(idx.size(), begin + threads);
        std::vector<std::future<bool>> jobs;
        for (std::size_t i = begin; i < end; ++i) {
            jobs.push_back(std::async(std::launch::async, [&stable, k = idx[i]] { return stable(k); }));
        }
        for (std::size_t i = begin; i < end; ++i) out[i] = jobs[i - begin].get();
    }
    return out;
}

// Largest grid index k in [0, n] such that every index up to k is stable,
// located by a coarse monotonicity check followed by bisection.
template <class Stable>
MarginResult grid_search(int n, int coarse_points, unsigned threads, Stable&& stable_at) {
    MarginResult res;
    auto stable = [&](int k) { return stable_at(k); };

    if (!stable(0)) {
        throw PreconditionError("margin search: the nominal closed loop is unstable");
    }
    res.runs = 1;
    if (n == 0) {
        res.value = 0;
        res.exceeds_cap = true;
        return res;
    }

    std::vector<int> coarse;
    const int m = std::clamp(coarse_points, 1, n);
    for (int j = 1; j <= m; ++j) {
        const int k = static_cast<int>(std::lround(static_cast<double>(j) * n / m));
        if (coarse.empty() || k != coarse.back()) coarse.push_back(k);
    }
    const auto flags = evaluate(coarse, stable, threads);
    res.runs += static_cast<int>(coarse.size());

    std::size_t first_bad = flags.size();
    for (std::size_t i = 0; i < flags.size(); ++i) {
        if (!flags[i]) {
            first_bad = i;
            break;
        }
    }
    for (std::size_t i = first_bad; i < flags.size(); ++i) {
        if (flags[i]) res.monotone = false;
    }

    if (first_bad == flags.size()) {
        res.value = n;
        res.exceeds_cap = true;
        return res;
    }

    int lo = first_bad == 0 ? 0 : coarse[first_bad - 1];
    int hi = coarse[first_bad];
    if (!res.monotone) {
        // Full sweep below the first unstable coarse point.
        std::vector<int> all;
        for (int k = 1; k < hi; ++k) all.push_back(k);
        const auto fine = evaluate(all, stable, threads);
        res.runs += static_cast<int>(all.size());
        int best = 0;
        for (std::size_t i = 0; i < fine.size() && fine[i]; ++i) best = all[i];
        res.value = best;
        return res;
    }
    while (hi - lo > 1) {
        const int mid = lo + (hi - lo) / 2;
        ++res.runs;
        if (stable(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    res.value = lo;
    return res;
}

template <class Stable>
MarginResult grid_sweep(int n, unsigned threads, Stable&& stable) {
    std::vector<int> all(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) all[static_cast<std::size_t>(k)] = k;
    const auto flags = evaluate(all, stable, threads);
    MarginResult res;
    res.runs = n + 1;
    if (!flags[0]) {
        throw PreconditionError("margin sweep: the nominal closed loop is unstable");
    }
    int best = 0;
    bool seen_bad = false;
    for (int k = 1; k <= n; ++k) {
        if (!flags[static_cast<std::size_t>(k)]) {
            seen_bad = true;
        } else if (seen_bad) {
            res.monotone = false;
        } else {
            best = k;
        }
    }
    res.value = best;
    res.exceeds_cap = !seen_bad;
    return res;
}

int grid_points(double span, double step) {
    if (!(span >= 0.0) || !(step > 0.0)) {
        throw ValidationError("margin search: cap and resolution must be positive");
    }
    return static_cast<int>(std::ceil(span / step - 1e-9));
}

}  // namespace

TrackingMetrics compute_metrics(const SimLog& log) {
    if (log.diverged) {
        throw MetricsUnavailableError("metrics are undefined for a diverged run");
    }
    require_consistent(log);
    if (!(log.tf > 0.0)) {
        throw ValidationError("log tf must be > 0");
    }
    TrackingMetrics m;
    for (std::size_t k = 0; k + 1 < log.size(); ++k) {
        const double dt = log.t[k + 1] - log.t[k];
        m.ise += 0.5 * dt * (log.e[k] * log.e[k] + log.e[k + 1] * log.e[k + 1]);
        m.iace += 0.5 * dt * (std::abs(log.u_ac[k]) + std::abs(log.u_ac[k + 1]));
        m.iacer += std::abs(log.u_ac[k + 1] - log.u_ac[k]);
    }
    m.ise /= log.tf;
    m.iace /= log.tf;
    m.iacer /= log.tf;
    return m;
}

bool detect_instability(const SimLog& log, const Scenario& scenario, const InstabilityRule& rule) {
    if (log.diverged || log.size() == 0) return true;
    for (const auto* v : {&log.y, &log.ydot, &log.u_c, &log.u_ac, &log.e}) {
        for (double x : *v) {
            if (!std::isfinite(x)) return true;
        }
    }
    scenario.validate();
    if (log.t.back() < scenario.tf - 0.5 * log.ts) return true;

    const std::size_t last = scenario.segments.size() - 1;
    const double t_start = scenario.segments[last].start_time;
    const double window_start = scenario.tf - rule.tail_fraction * (scenario.tf - t_start);
    const double limit = rule.settle_fraction * step_amplitude(scenario, last);

    double worst = 0.0;
    for (std::size_t k = 0; k < log.size(); ++k) {
        if (log.t[k] >= window_start - 1e-9) worst = std::max(worst, std::abs(log.e[k]));
    }
    return worst > limit;
}

std::vector<double> segment_settling_times(const SimLog& log, const Scenario& scenario, double band) {
    require_consistent(log);
    scenario.validate();
    std::vector<double> out(scenario.segments.size(), -1.0);
    for (std::size_t i = 0; i < scenario.segments.size(); ++i) {
        const auto [first, end] = segment_range(log, scenario, i);
        if (first >= end) continue;
        const double limit = band * step_amplitude(scenario, i);
        const double t0 = scenario.segments[i].start_time;
        if (std::abs(log.e[end - 1]) > limit) continue;
        double settle = 0.0;
        for (std::size_t k = end; k-- > first;) {
            if (std::abs(log.e[k]) > limit) {
                settle = log.t[k + 1] - t0;
                break;
            }
        }
        out[i] = settle;
    }
    return out;
}

bool settles_each_segment(const SimLog& log, const Scenario& scenario, double band, double hold) {
    if (log.diverged) return false;
    const auto times = segment_settling_times(log, scenario, band);
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < 0.0) return false;
        const double available = segment_end(scenario, i) - scenario.segments[i].start_time;
        if (available - times[i] < hold - 1e-9) return false;
    }
    return true;
}

void BenchmarkSetup::validate() const {
    if (!controller) {
        throw ValidationError("benchmark: no controller");
    }
    plant.validate();
    actuator.validate();
    scenario.validate();
    sim.validate();
}

SimLog BenchmarkSetup::run() const { return run_closed_loop(plant, *controller, actuator, scenario, sim); }

SimLog BenchmarkSetup::run_perturbed(double gain_scale, double injected_delay) const {
    SimConfig cfg = sim;
    cfg.gain_scale = gain_scale;
    cfg.injected_delay = injected_delay;
    return run_closed_loop(plant, *controller, actuator, scenario, cfg);
}

MarginResult estimate_gain_margin(const BenchmarkSetup& setup, const MarginSearch& search) {
    setup.validate();
    if (!(search.cap >= 1.0)) {
        throw ValidationError("gain margin cap must be >= 1");
    }
    const double step = search.tolerance;
    const int n = grid_points(search.cap - 1.0, step);
    auto gain = [&](int k) { return std::min(search.cap, 1.0 + step * k); };
    auto stable = [&](int k) {
        return !detect_instability(setup.run_perturbed(gain(k), 0.0), setup.scenario, setup.rule);
    };
    MarginResult res = grid_search(n, search.coarse_points, worker_count(search.threads), stable);
    res.value = gain(static_cast<int>(res.value));
    return res;
}

MarginResult estimate_delay_margin(const BenchmarkSetup& setup, MarginSearch search) {
    setup.validate();
    const double ts = setup.sim.ts;
    const int n = grid_points(search.cap, ts);
    auto delay = [&](int k) { return ts * k; };
    auto stable = [&](int k) {
        return !detect_instability(setup.run_perturbed(1.0, delay(k)), setup.scenario, setup.rule);
    };
    MarginResult res = grid_search(n, search.coarse_points, worker_count(search.threads), stable);
    res.value = delay(static_cast<int>(res.value));
    return res;
}

MarginResult sweep_gain_margin(const BenchmarkSetup& setup, double cap, double step, unsigned threads) {
    setup.validate();
    const int n = grid_points(cap - 1.0, step);
    auto gain = [&](int k) { return std::min(cap, 1.0 + step * k); };
    auto stable = [&](int k) {
        return !detect_instability(setup.run_perturbed(gain(k), 0.0), setup.scenario, setup.rule);
    };
    MarginResult res = grid_sweep(n, worker_count(threads), stable);
    res.value = gain(static_cast<int>(res.value));
    return res;
}

MarginResult sweep_delay_margin(const BenchmarkSetup& setup, double cap, unsigned threads) {
    setup.validate();
    const double ts = setup.sim.ts;
    const int n = grid_points(cap, ts);
    auto stable = [&](int k) {
        return !detect_instability(setup.run_perturbed(1.0, ts * k), setup.scenario, setup.rule);
    };
    MarginResult res = grid_sweep(n, worker_count(threads), stable);
    res.value = ts * res.value;
    return res;
}

}  // namespace awbench
