#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "awbench/analysis.hpp"
#include "awbench/mpc.hpp"

namespace awbench {

/// Malformed config document; the message carries line and column.
class ConfigParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::vector<std::string> controllers{"pd_aw", "lqi_aw", "mpc"};

    StateSpace plant = remus_yaw_model();
    ActuatorParams actuator;

    PdAwParams pd;
    AlgebraicLoop pd_loop = AlgebraicLoop::Implicit;

    Vector lqi_q_diag = (Vector(3) << 1000.0, 50.0, 25.0).finished();
    double lqi_r = 1.0;
    double lqi_kaw = 4.0;
    AlgebraicLoop lqi_loop = AlgebraicLoop::Delayed;

    PidGains pid{8.0, 1.0, 6.0};
    AwMode pid_aw = aw::IntegralClipping{};

    MpcParams mpc;
    /// When false, du_max follows rate_max * ts.
    bool du_max_set = false;

    Scenario scenario = Scenario::benchmark_default();
    SimConfig sim;
    InstabilityRule rule;

    MarginSearch gain_search{10.5, 0.05, 12, 0};
    MarginSearch delay_search{3.0, 0.01, 12, 0};

    std::filesystem::path out_dir = "out";
    bool margins = true;
    bool plots = true;

    /// Checks every module invariant. Throws ValidationError naming the offending key.
    void validate() const;
};

/// Names accepted in `controllers` and by --controller.
const std::vector<std::string>& known_controllers();

/// Flat YAML document; unknown keys are rejected, missing keys keep defaults.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Controller prototype for one name in `known_controllers()`.
std::shared_ptr<const Controller> make_controller(const RunConfig& config, const std::string& name);

BenchmarkSetup make_setup(const RunConfig& config, const std::string& name);

/// Every recognised config key, for documentation and error messages.
const std::vector<std::string>& config_keys();

}  // namespace awbench
