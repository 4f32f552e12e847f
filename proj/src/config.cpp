#include "awbench/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "awbench/errors.hpp"

namespace awbench {

namespace {

std::string where(const YAML::Node& node) {
    const auto mark = node.Mark();
    if (mark.is_null()) return "";
    std::ostringstream s;
    s << " (line " << mark.line + 1 << ", column " << mark.column + 1 << ")";
    return s.str();
}

template <class T>
T as(const YAML::Node& node, const std::string& key) {
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigParseError("config: key '" + key + "' has the wrong type" + where(node));
    }
}

double as_number(const YAML::Node& node, const std::string& key) {
    const auto v = as<double>(node, key);
    if (!std::isfinite(v)) {
        throw ValidationError("config: '" + key + "' must be finite");
    }
    return v;
}

AlgebraicLoop as_loop(const YAML::Node& node, const std::string& key) {
    const auto v = as<std::string>(node, key);
    if (v == "implicit") return AlgebraicLoop::Implicit;
    if (v == "delayed") return AlgebraicLoop::Delayed;
    throw ValidationError("config: '" + key + "' must be 'implicit' or 'delayed'" + where(node));
}

std::vector<std::string> as_controllers(const YAML::Node& node) {
    std::vector<std::string> out;
    if (node.IsScalar()) {
        out.push_back(node.as<std::string>());
    } else {
        out = as<std::vector<std::string>>(node, "controllers");
    }
    return out;
}

Scenario as_scenario(const YAML::Node& node, double tf) {
    if (!node.IsSequence()) {
        throw ConfigParseError("config: 'setpoints' must be a list of [time, setpoint] pairs" + where(node));
    }
    Scenario sc;
    sc.tf = tf;
    for (const auto& item : node) {
        const auto pair = as<std::vector<double>>(item, "setpoints");
        if (pair.size() != 2) {
            throw ConfigParseError("config: each setpoint entry needs exactly [time, setpoint]" + where(item));
        }
        sc.segments.push_back({pair[0], pair[1]});
    }
    return sc;
}

struct Pending {
    std::optional<double> tf;
    std::optional<YAML::Node> setpoints;
    std::optional<std::string> scenario_file;
    std::string pid_aw_name;
    std::optional<double> pid_aw_limit;
    std::optional<double> pid_aw_kaw;
};

using Setter = std::function<void(RunConfig&, Pending&, const YAML::Node&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"controllers", [](RunConfig& c, Pending&, const YAML::Node& n) { c.controllers = as_controllers(n); }},
        // actuator
        {"tau", [](RunConfig& c, Pending&, const YAML::Node& n) { c.actuator.tau = as_number(n, "tau"); }},
        {"u_max", [](RunConfig& c, Pending&, const YAML::Node& n) { c.actuator.u_max = as_number(n, "u_max"); }},
        {"rate_max",
         [](RunConfig& c, Pending&, const YAML::Node& n) { c.actuator.rate_max = as_number(n, "rate_max"); }},
        // PD_AW
        {"kp", [](RunConfig& c, Pending&, const YAML::Node& n) { c.pd.kp = as_number(n, "kp"); }},
        {"kd", [](RunConfig& c, Pending&, const YAML::Node& n) { c.pd.kd = as_number(n, "kd"); }},
        {"pd_kaw", [](RunConfig& c, Pending&, const YAML::Node& n) { c.pd.kaw = as_number(n, "pd_kaw"); }},
        {"pd_loop", [](RunConfig& c, Pending&, const YAML::Node& n) { c.pd_loop = as_loop(n, "pd_loop"); }},
        // LQI_AW
        {"lqi_q",
         [](RunConfig& c, Pending&, const YAML::Node& n) {
             const auto q = as<std::vector<double>>(n, "lqi_q");
             c.lqi_q_diag = Eigen::Map<const Vector>(q.data(), static_cast<Eigen::Index>(q.size()));
         }},
        {"lqi_r", [](RunConfig& c, Pending&, const YAML::Node& n) { c.lqi_r = as_number(n, "lqi_r"); }},
        {"lqi_kaw", [](RunConfig& c, Pending&, const YAML::Node& n) { c.lqi_kaw = as_number(n, "lqi_kaw"); }},
        {"lqi_loop", [](RunConfig& c, Pending&, const YAML::Node& n) { c.lqi_loop = as_loop(n, "lqi_loop"); }},
        // classic PID
        {"pid_kp", [](RunConfig& c, Pending&, const YAML::Node& n) { c.pid.kp = as_number(n, "pid_kp"); }},
        {"pid_ki", [](RunConfig& c, Pending&, const YAML::Node& n) { c.pid.ki = as_number(n, "pid_ki"); }},
        {"pid_kd", [](RunConfig& c, Pending&, const YAML::Node& n) { c.pid.kd = as_number(n, "pid_kd"); }},
        {"pid_aw", [](RunConfig&, Pending& p, const YAML::Node& n) { p.pid_aw_name = as<std::string>(n, "pid_aw"); }},
        {"pid_aw_limit",
         [](RunConfig&, Pending& p, const YAML::Node& n) { p.pid_aw_limit = as_number(n, "pid_aw_limit"); }},
        {"pid_aw_kaw", [](RunConfig&, Pending& p, const YAML::Node& n) { p.pid_aw_kaw = as_number(n, "pid_aw_kaw"); }},
        // MPC
        {"ny", [](RunConfig& c, Pending&, const YAML::Node& n) { c.mpc.ny = as<int>(n, "ny"); }},
        {"nu", [](RunConfig& c, Pending&, const YAML::Node& n) { c.mpc.nu = as<int>(n, "nu"); }},
        {"lambda", [](RunConfig& c, Pending&, const YAML::Node& n) { c.mpc.lambda = as_number(n, "lambda"); }},
        {"du_max",
         [](RunConfig& c, Pending&, const YAML::Node& n) {
             c.mpc.du_max = as_number(n, "du_max");
             c.du_max_set = true;
         }},
        {"mpc_preview", [](RunConfig& c, Pending&, const YAML::Node& n) { c.mpc.preview = as<bool>(n, "mpc_preview"); }},
        {"mpc_lag_in_model",
         [](RunConfig& c, Pending&, const YAML::Node& n) { c.mpc.lag_in_model = as<bool>(n, "mpc_lag_in_model"); }},
        {"mpc_solver",
         [](RunConfig& c, Pending&, const YAML::Node& n) {
             const auto v = as<std::string>(n, "mpc_solver");
             if (v == "active_set") {
                 c.mpc.solver = QpMethod::ActiveSet;
             } else if (v == "hildreth") {
                 c.mpc.solver = QpMethod::Hildreth;
             } else {
                 throw ValidationError("config: 'mpc_solver' must be 'active_set' or 'hildreth'" + where(n));
             }
         }},
        {"mpc_max_iterations",
         [](RunConfig& c, Pending&, const YAML::Node& n) { c.mpc.max_iterations = as<int>(n, "mpc_max_iterations"); }},
        {"mpc_tolerance",
         [](RunConfig& c, Pending&, const YAML::Node& n) { c.mpc.tolerance = as_number(n, "mpc_tolerance"); }},
        // simulation
        {"ts", [](RunConfig& c, Pending&, const YAML::Node& n) { c.sim.ts = as_number(n, "ts"); }},
        {"h", [](RunConfig& c, Pending&, const YAML::Node& n) { c.sim.h = as_number(n, "h"); }},
        {"tf", [](RunConfig&, Pending& p, const YAML::Node& n) { p.tf = as_number(n, "tf"); }},
        {"setpoints", [](RunConfig&, Pending& p, const YAML::Node& n) { p.setpoints = n; }},
        {"scenario_file",
         [](RunConfig&, Pending& p, const YAML::Node& n) { p.scenario_file = as<std::string>(n, "scenario_file"); }},
        {"injection",
         [](RunConfig& c, Pending&, const YAML::Node& n) {
             const auto v = as<std::string>(n, "injection");
             if (v == "plant_input") {
                 c.sim.injection = InjectionPoint::PlantInput;
             } else if (v == "controller_output") {
                 c.sim.injection = InjectionPoint::ControllerOutput;
             } else {
                 throw ValidationError("config: 'injection' must be 'plant_input' or 'controller_output'" +
                                       where(n));
             }
         }},
        {"divergence_factor",
         [](RunConfig& c, Pending&, const YAML::Node& n) {
             c.sim.divergence_factor = as_number(n, "divergence_factor");
         }},
        // analysis
        {"settle_fraction",
         [](RunConfig& c, Pending&, const YAML::Node& n) { c.rule.settle_fraction = as_number(n, "settle_fraction"); }},
        {"tail_fraction",
         [](RunConfig& c, Pending&, const YAML::Node& n) { c.rule.tail_fraction = as_number(n, "tail_fraction"); }},
        {"gm_cap", [](RunConfig& c, Pending&, const YAML::Node& n) { c.gain_search.cap = as_number(n, "gm_cap"); }},
        {"gm_tolerance",
         [](RunConfig& c, Pending&, const YAML::Node& n) { c.gain_search.tolerance = as_number(n, "gm_tolerance"); }},
        {"dm_cap", [](RunConfig& c, Pending&, const YAML::Node& n) { c.delay_search.cap = as_number(n, "dm_cap"); }},
        {"margin_threads",
         [](RunConfig& c, Pending&, const YAML::Node& n) {
             const auto t = as<int>(n, "margin_threads");
             if (t < 0) throw ValidationError("config: 'margin_threads' must be >= 0");
             c.gain_search.threads = c.delay_search.threads = static_cast<unsigned>(t);
         }},
        // output
        {"out_dir", [](RunConfig& c, Pending&, const YAML::Node& n) { c.out_dir = as<std::string>(n, "out_dir"); }},
        {"margins", [](RunConfig& c, Pending&, const YAML::Node& n) { c.margins = as<bool>(n, "margins"); }},
        {"plots", [](RunConfig& c, Pending&, const YAML::Node& n) { c.plots = as<bool>(n, "plots"); }},
    };
    return table;
}

YAML::Node load_document(std::string_view text) {
    try {
        return YAML::Load(std::string(text));
    } catch (const YAML::ParserException& e) {
        std::ostringstream s;
        s << "config: parse error at line " << e.mark.line + 1 << ", column " << e.mark.column + 1 << ": " << e.msg;
        throw ConfigParseError(s.str());
    }
}

Scenario load_scenario_file(const std::filesystem::path& path, std::optional<double> tf) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("config: cannot open scenario file " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    const YAML::Node doc = load_document(buf.str());
    if (!doc.IsMap() || !doc["setpoints"]) {
        throw ConfigParseError("scenario file " + path.string() + " needs a 'setpoints' list");
    }
    for (const auto& kv : doc) {
        const auto key = kv.first.as<std::string>();
        if (key != "setpoints" && key != "tf") {
            throw ConfigParseError("scenario file " + path.string() + ": unknown key '" + key + "'");
        }
    }
    const double t_end = tf ? *tf : doc["tf"] ? as_number(doc["tf"], "tf") : 80.0;
    return as_scenario(doc["setpoints"], t_end);
}

}  // namespace

const std::vector<std::string>& known_controllers() {
    static const std::vector<std::string> names{"pd_aw", "lqi_aw", "classic_pid", "mpc"};
    return names;
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [name, _] : setters()) k.push_back(name);
        return k;
    }();
    return keys;
}

void RunConfig::validate() const {
    if (controllers.empty()) {
        throw ValidationError("config: 'controllers' must name at least one controller");
    }
    for (const auto& name : controllers) {
        const auto& known = known_controllers();
        if (std::find(known.begin(), known.end(), name) == known.end()) {
            throw ValidationError("config: unknown controller '" + name + "'");
        }
    }
    plant.validate();
    actuator.validate();
    pd.validate();
    if (lqi_q_diag.size() != plant.states() + 1 || (lqi_q_diag.array() < 0.0).any()) {
        throw ValidationError("config: 'lqi_q' needs n+1 non-negative entries");
    }
    if (!(lqi_r > 0.0)) {
        throw ValidationError("config: 'lqi_r' must be > 0");
    }
    awbench::validate(pid_aw);
    mpc.validate();
    if (std::abs(mpc.ts - sim.ts) > 1e-12) {
        throw ValidationError("config: MPC and simulation control periods differ");
    }
    scenario.validate();
    sim.validate();
    if (!(rule.settle_fraction > 0.0) || !(rule.tail_fraction > 0.0) || rule.tail_fraction > 1.0) {
        throw ValidationError("config: 'settle_fraction' must be > 0 and 'tail_fraction' in (0, 1]");
    }
    if (!(gain_search.cap >= 1.0) || !(gain_search.tolerance > 0.0)) {
        throw ValidationError("config: 'gm_cap' must be >= 1 and 'gm_tolerance' > 0");
    }
    if (!(delay_search.cap >= 0.0)) {
        throw ValidationError("config: 'dm_cap' must be >= 0");
    }
}

RunConfig parse_config(std::string_view text) {
    const YAML::Node doc = load_document(text);
    RunConfig cfg;
    Pending pending;
    if (doc.IsDefined() && !doc.IsNull()) {
        if (!doc.IsMap()) {
            throw ConfigParseError("config: top level must be a mapping of key: value" + where(doc));
        }
        const auto& table = setters();
        for (const auto& kv : doc) {
            const auto key = kv.first.as<std::string>();
            const auto it = table.find(key);
            if (it == table.end()) {
                throw ValidationError("config: unknown key '" + key + "'" + where(kv.first));
            }
            it->second(cfg, pending, kv.second);
        }
    }

    if (pending.setpoints && pending.scenario_file) {
        throw ValidationError("config: give either 'setpoints' or 'scenario_file', not both");
    }
    if (pending.setpoints) {
        cfg.scenario = as_scenario(*pending.setpoints, pending.tf.value_or(80.0));
    } else if (pending.scenario_file) {
        cfg.scenario = load_scenario_file(*pending.scenario_file, pending.tf);
    } else if (pending.tf) {
        cfg.scenario.tf = *pending.tf;
    }

    if (!pending.pid_aw_name.empty()) {
        const auto& n = pending.pid_aw_name;
        if (n == "none") {
            cfg.pid_aw = aw::None{};
        } else if (n == "clipping") {
            cfg.pid_aw = aw::IntegralClipping{};
        } else if (n == "conditional") {
            cfg.pid_aw = aw::ConditionalIntegration{};
        } else if (n == "clamping") {
            cfg.pid_aw = aw::IntegratorClamping{};
        } else if (n == "back_calculation") {
            cfg.pid_aw = aw::BackCalculation{};
        } else {
            throw ValidationError("config: unknown 'pid_aw' mode '" + n + "'");
        }
    }
    if (pending.pid_aw_limit) {
        auto* clip = std::get_if<aw::IntegralClipping>(&cfg.pid_aw);
        if (clip == nullptr) throw ValidationError("config: 'pid_aw_limit' needs pid_aw: clipping");
        clip->limit = *pending.pid_aw_limit;
    }
    if (pending.pid_aw_kaw) {
        auto* back = std::get_if<aw::BackCalculation>(&cfg.pid_aw);
        if (back == nullptr) throw ValidationError("config: 'pid_aw_kaw' needs pid_aw: back_calculation");
        back->kaw = *pending.pid_aw_kaw;
    }

    cfg.mpc.ts = cfg.sim.ts;
    cfg.mpc.u_max = cfg.actuator.u_max;
    if (!cfg.du_max_set) cfg.mpc.du_max = cfg.actuator.rate_max * cfg.sim.ts;
    cfg.delay_search.tolerance = cfg.sim.ts;
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("config: cannot open " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config(buf.str());
    } catch (const ConfigParseError& e) {
        throw ConfigParseError(path.string() + ": " + e.what());
    }
}

std::shared_ptr<const Controller> make_controller(const RunConfig& config, const std::string& name) {
    if (name == "pd_aw") {
        return std::make_shared<PdAwController>(config.pd, config.pd_loop);
    }
    if (name == "lqi_aw") {
        const Matrix q = config.lqi_q_diag.asDiagonal();
        const Matrix r = Matrix::Constant(1, 1, config.lqi_r);
        return std::make_shared<LqiAwController>(LqiAwParams::design(config.plant, q, r, config.lqi_kaw),
                                                 config.sim.ts, config.lqi_loop);
    }
    if (name == "classic_pid") {
        return std::make_shared<ClassicPidController>(config.pid, config.pid_aw, config.sim.ts);
    }
    if (name == "mpc") {
        return std::make_shared<MpcController>(config.plant, config.actuator, config.mpc);
    }
    throw ValidationError("unknown controller '" + name + "'");
}

BenchmarkSetup make_setup(const RunConfig& config, const std::string& name) {
    BenchmarkSetup s;
    s.plant = config.plant;
    s.controller = make_controller(config, name);
    s.actuator = config.actuator;
    s.scenario = config.scenario;
    s.sim = config.sim;
    s.rule = config.rule;
    s.validate();
    return s;
}

}  // namespace awbench
