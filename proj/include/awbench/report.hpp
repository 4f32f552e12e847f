#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "awbench/analysis.hpp"

namespace awbench {

inline constexpr const char* kCsvHeader = "t,r,y,ydot,u_c,u_ac,e";

/// One row per control sample, 17 significant digits.
void write_csv(const SimLog& log, const std::filesystem::path& path);

/// Reads a file produced by write_csv. ts is taken from the first interval and
/// tf from the last time stamp.
SimLog read_csv(const std::filesystem::path& path);

struct NamedLog {
    std::string name;
    const SimLog* log = nullptr;
};

enum class PlotKind {
    Tracking,  ///< reference once, then y per controller
    Control,   ///< u_ac per controller
};

/// One polyline per signal, with axes, ticks and a legend.
void write_svg_plot(const std::vector<NamedLog>& logs, PlotKind kind, const std::filesystem::path& path);

struct ControllerReport {
    std::string controller;
    bool diverged = false;
    std::optional<TrackingMetrics> metrics;
    std::optional<MarginResult> gm;
    std::optional<MarginResult> dm;
};

/// JSON array of objects with keys controller, ise, iace, iacer, gm,
/// gm_exceeds_cap, dm, dm_exceeds_cap, diverged. Missing values are null.
std::string metrics_json(const std::vector<ControllerReport>& reports);
void write_metrics_json(const std::vector<ControllerReport>& reports, const std::filesystem::path& path);
std::vector<ControllerReport> read_metrics_json(const std::filesystem::path& path);

}  // namespace awbench
