#include "awbench/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "awbench/errors.hpp"

namespace awbench {

namespace {

ControllerReport evaluate(const RunConfig& config, const std::string& name, const SimLog& log, bool margins,
                          std::ostream& progress) {
    ControllerReport rep;
    rep.controller = name;
    rep.diverged = log.diverged;
    if (log.diverged) {
        progress << name << ": nominal run diverged at t = " << (log.size() ? log.t.back() : 0.0) << " s\n";
        return rep;
    }
    rep.metrics = compute_metrics(log);
    if (margins) {
        const BenchmarkSetup setup = make_setup(config, name);
        if (detect_instability(log, config.scenario, config.rule)) {
            progress << name << ": nominal run does not settle; margins skipped\n";
        } else {
            rep.gm = estimate_gain_margin(setup, config.gain_search);
            rep.dm = estimate_delay_margin(setup, config.delay_search);
        }
    }
    return rep;
}

void print_report(const ControllerReport& r, std::ostream& out) {
    out << r.controller << ':';
    if (r.metrics) {
        out << " ISE " << r.metrics->ise << "  IACE " << r.metrics->iace << "  IACER " << r.metrics->iacer;
    } else {
        out << " diverged";
    }
    if (r.gm) out << "  GM " << (r.gm->exceeds_cap ? ">" : "") << r.gm->value;
    if (r.dm) out << "  DM " << (r.dm->exceeds_cap ? ">" : "") << r.dm->value << " s";
    out << '\n';
}

}  // namespace

BenchmarkOutput run_benchmark(const RunConfig& config, std::ostream& progress) {
    config.validate();
    BenchmarkOutput result;
    std::vector<SimLog> logs;
    logs.reserve(config.controllers.size());
    for (const auto& name : config.controllers) {
        const BenchmarkSetup setup = make_setup(config, name);
        logs.push_back(setup.run());
        const auto csv = config.out_dir / (name + ".csv");
        write_csv(logs.back(), csv);
        result.files.push_back(csv);
        result.reports.push_back(evaluate(config, name, logs.back(), config.margins, progress));
        print_report(result.reports.back(), progress);
    }
    const auto json = config.out_dir / "metrics.json";
    write_metrics_json(result.reports, json);
    result.files.push_back(json);

    if (config.plots) {
        std::vector<NamedLog> named;
        for (std::size_t i = 0; i < logs.size(); ++i) named.push_back({config.controllers[i], &logs[i]});
        for (const auto& [kind, file] : {std::pair{PlotKind::Tracking, "tracking.svg"},
                                         std::pair{PlotKind::Control, "control.svg"}}) {
            const auto path = config.out_dir / file;
            write_svg_plot(named, kind, path);
            result.files.push_back(path);
        }
    }
    return result;
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Anti-windup closed-loop benchmark on the REMUS yaw model"};
    app.require_subcommand(0, 1);

    std::string config_path;
    std::string out_dir;
    bool no_margins = false;
    bool no_plots = false;
    std::string controller;
    bool with_margins = false;
    std::string log_path;

    auto* compare = app.add_subcommand("compare", "Run all configured controllers (default)");
    compare->add_option("--config", config_path, "YAML config file")->check(CLI::ExistingFile);
    compare->add_option("--out", out_dir, "Output directory");
    compare->add_flag("--no-margins", no_margins, "Skip gain/delay margin sweeps");
    compare->add_flag("--no-plots", no_plots, "Skip SVG plots");

    auto* run = app.add_subcommand("run", "Simulate one controller");
    run->add_option("--controller", controller, "Controller name")->required()->check(
        CLI::IsMember(known_controllers()));
    run->add_option("--config", config_path, "YAML config file")->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "Output directory");
    run->add_flag("--margins", with_margins, "Also estimate gain/delay margins");
    run->add_flag("--no-plots", no_plots, "Skip SVG plots");

    auto* margins = app.add_subcommand("margins", "Gain and delay margins of one controller");
    margins->add_option("--controller", controller, "Controller name")->required()->check(
        CLI::IsMember(known_controllers()));
    margins->add_option("--config", config_path, "YAML config file")->check(CLI::ExistingFile);

    auto* metrics = app.add_subcommand("metrics", "Metrics of a CSV log");
    metrics->add_option("--log", log_path, "CSV log written by this tool")->required()->check(CLI::ExistingFile);

    // Bare options belong to the default subcommand.
    std::vector<const char*> args(argv, argv + argc);
    if (argc > 1) {
        const std::string first = argv[1];
        if (first.rfind("-", 0) == 0 && first != "-h" && first != "--help") {
            args.insert(args.begin() + 1, "compare");
        }
    }

    try {
        app.parse(static_cast<int>(args.size()), args.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        RunConfig cfg = config_path.empty() ? parse_config("") : load_config(config_path);
        if (!out_dir.empty()) cfg.out_dir = out_dir;

        if (*metrics) {
            const SimLog log = read_csv(log_path);
            ControllerReport rep;
            rep.controller = std::filesystem::path(log_path).stem().string();
            rep.metrics = compute_metrics(log);
            out << metrics_json({rep});
            return 0;
        }
        if (*margins) {
            const BenchmarkSetup setup = make_setup(cfg, controller);
            ControllerReport rep;
            rep.controller = controller;
            rep.gm = estimate_gain_margin(setup, cfg.gain_search);
            rep.dm = estimate_delay_margin(setup, cfg.delay_search);
            out << metrics_json({rep});
            return 0;
        }
        if (*run) {
            cfg.controllers = {controller};
            cfg.margins = with_margins;
        } else if (no_margins) {
            cfg.margins = false;
        }
        if (no_plots) cfg.plots = false;
        const auto result = run_benchmark(cfg, out);
        for (const auto& f : result.files) out << "wrote " << f.string() << '\n';
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace awbench
