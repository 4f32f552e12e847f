#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "awbench/analysis.hpp"
#include "awbench/cli.hpp"
#include "awbench/config.hpp"
#include "awbench/errors.hpp"
#include "awbench/mpc.hpp"

namespace py = pybind11;
using namespace awbench;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

py::dict log_to_dict(const SimLog& log) {
    py::dict d;
    d["t"] = to_array(log.t);
    d["r"] = to_array(log.r);
    d["y"] = to_array(log.y);
    d["ydot"] = to_array(log.ydot);
    d["u_c"] = to_array(log.u_c);
    d["u_ac"] = to_array(log.u_ac);
    d["e"] = to_array(log.e);
    d["diverged"] = log.diverged;
    d["max_abs_u_ac"] = log.max_abs_u_ac;
    d["max_micro_step_delta_u_ac"] = log.max_micro_step_delta_u_ac;
    return d;
}

py::dict margin_to_dict(const MarginResult& m) {
    py::dict d;
    d["value"] = m.value;
    d["exceeds_cap"] = m.exceeds_cap;
    d["monotone"] = m.monotone;
    d["runs"] = m.runs;
    return d;
}

}  // namespace

PYBIND11_MODULE(_awbench, m) {
    m.doc() = "Anti-windup benchmark on the REMUS yaw model";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<ConfigParseError>(m, "ConfigParseError", PyExc_ValueError);
    py::register_exception<InfeasibleProblemError>(m, "InfeasibleProblemError", PyExc_RuntimeError);
    py::register_exception<MetricsUnavailableError>(m, "MetricsUnavailableError", PyExc_RuntimeError);
    py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_RuntimeError);

    py::class_<StateSpace>(m, "StateSpace")
        .def(py::init([](Matrix a, Matrix b, Matrix c) {
                 StateSpace s{std::move(a), std::move(b), std::move(c)};
                 s.validate();
                 return s;
             }),
             py::arg("A"), py::arg("B"), py::arg("C"))
        .def_readwrite("A", &StateSpace::A)
        .def_readwrite("B", &StateSpace::B)
        .def_readwrite("C", &StateSpace::C);

    m.def("remus_yaw_model", &remus_yaw_model);
    m.def(
        "zoh_discretize",
        [](const StateSpace& sys, double ts) {
            const auto d = zoh_discretize(sys, ts);
            return py::make_tuple(d.Ad, d.Bd);
        },
        py::arg("sys"), py::arg("ts"));
    m.def(
        "lqi_gains",
        [](const StateSpace& sys, const Matrix& q, const Matrix& r) {
            const auto g = lqi_gains(sys, q, r);
            py::dict d;
            d["k_x"] = g.k_x;
            d["k_i"] = g.k_i;
            d["k_xp"] = g.k_xp;
            d["P"] = g.care.P;
            d["residual"] = g.care.residual;
            return d;
        },
        py::arg("sys"), py::arg("q"), py::arg("r"));

    m.def(
        "solve_qp",
        [](const Matrix& h, const Vector& f, const Matrix& a, const Vector& b, const std::string& method) {
            QpMethod qm;
            if (method == "hildreth") {
                qm = QpMethod::Hildreth;
            } else if (method == "active_set") {
                qm = QpMethod::ActiveSet;
            } else {
                throw ValidationError("method must be 'hildreth' or 'active_set'");
            }
            const auto s = solve_qp(QpProblem{h, f, a, b}, qm);
            py::dict d;
            d["x"] = s.x;
            d["multipliers"] = s.multipliers;
            d["iterations"] = s.iterations;
            d["kkt_residual"] = s.kkt_residual;
            d["converged"] = s.converged;
            return d;
        },
        py::arg("h"), py::arg("f"), py::arg("a"), py::arg("b"), py::arg("method") = "hildreth");

    m.def("known_controllers", &known_controllers);
    m.def("config_keys", &config_keys);

    m.def(
        "simulate",
        [](const std::string& controller, const std::string& config) {
            const RunConfig cfg = parse_config(config);
            SimLog log;
            {
                py::gil_scoped_release release;
                log = make_setup(cfg, controller).run();
            }
            return log_to_dict(log);
        },
        py::arg("controller"), py::arg("config") = "");

    m.def(
        "metrics",
        [](const std::string& controller, const std::string& config) {
            const RunConfig cfg = parse_config(config);
            const auto log = make_setup(cfg, controller).run();
            const auto mt = compute_metrics(log);
            py::dict d;
            d["ise"] = mt.ise;
            d["iace"] = mt.iace;
            d["iacer"] = mt.iacer;
            d["unstable"] = detect_instability(log, cfg.scenario, cfg.rule);
            return d;
        },
        py::arg("controller"), py::arg("config") = "");

    m.def(
        "margins",
        [](const std::string& controller, const std::string& config) {
            const RunConfig cfg = parse_config(config);
            const auto setup = make_setup(cfg, controller);
            MarginResult gm, dm;
            {
                py::gil_scoped_release release;
                gm = estimate_gain_margin(setup, cfg.gain_search);
                dm = estimate_delay_margin(setup, cfg.delay_search);
            }
            py::dict d;
            d["gm"] = margin_to_dict(gm);
            d["dm"] = margin_to_dict(dm);
            return d;
        },
        py::arg("controller"), py::arg("config") = "");

    m.def(
        "compare",
        [](const std::string& config, const std::string& out_dir) {
            RunConfig cfg = parse_config(config);
            if (!out_dir.empty()) cfg.out_dir = out_dir;
            std::ostringstream progress;
            BenchmarkOutput out;
            {
                py::gil_scoped_release release;
                out = run_benchmark(cfg, progress);
            }
            std::vector<std::string> files;
            for (const auto& f : out.files) files.push_back(f.string());
            return py::make_tuple(metrics_json(out.reports), files);
        },
        py::arg("config") = "", py::arg("out_dir") = "");
}
