#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "awbench/config.hpp"
#include "awbench/report.hpp"

namespace awbench {

/// Artifacts written by one benchmark invocation.
struct BenchmarkOutput {
    std::vector<ControllerReport> reports;
    std::vector<std::filesystem::path> files;
};

/// Simulates every configured controller, writes <name>.csv, metrics.json and
/// (when enabled) tracking.svg / control.svg into config.out_dir.
/// A diverged nominal run is reported with null metrics, not thrown.
BenchmarkOutput run_benchmark(const RunConfig& config, std::ostream& progress);

/// Entry point shared by the executable and the tests. Returns the exit status.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace awbench
