#include "awbench/report.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "awbench/errors.hpp"

namespace awbench {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    return out;
}

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_short(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

void require_signals(const SimLog& log) {
    if (log.size() == 0) {
        throw ValidationError("log has no samples");
    }
    for (const auto* v : {&log.r, &log.y, &log.ydot, &log.u_c, &log.u_ac, &log.e}) {
        if (v->size() != log.size()) {
            throw ValidationError("log signals have different lengths");
        }
    }
}

// 1, 2 or 5 times a power of ten, giving about `target` intervals.
double nice_step(double span, int target) {
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (m * mag >= raw) return m * mag;
    }
    return 10.0 * mag;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

void write_csv(const SimLog& log, const std::filesystem::path& path) {
    require_signals(log);
    auto out = open_out(path);
    std::string text = kCsvHeader;
    text += '\n';
    for (std::size_t k = 0; k < log.size(); ++k) {
        for (const double v : {log.t[k], log.r[k], log.y[k], log.ydot[k], log.u_c[k], log.u_ac[k]}) {
            text += fmt17(v);
            text += ',';
        }
        text += fmt17(log.e[k]);
        text += '\n';
    }
    out << text;
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

SimLog read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) {
        throw ValidationError(path.string() + ": header must be " + kCsvHeader);
    }
    SimLog log;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        double v[7];
        std::size_t pos = 0;
        for (int i = 0; i < 7; ++i) {
            const auto end = line.find(',', pos);
            if ((i < 6) != (end != std::string::npos)) {
                throw ValidationError(path.string() + ": line " + std::to_string(lineno) + " needs 7 columns");
            }
            const std::string cell = line.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
            char* stop = nullptr;
            v[i] = std::strtod(cell.c_str(), &stop);
            if (cell.empty() || *stop != '\0') {
                throw ValidationError(path.string() + ": line " + std::to_string(lineno) + " has a bad number");
            }
            pos = end + 1;
        }
        log.t.push_back(v[0]);
        log.r.push_back(v[1]);
        log.y.push_back(v[2]);
        log.ydot.push_back(v[3]);
        log.u_c.push_back(v[4]);
        log.u_ac.push_back(v[5]);
        log.e.push_back(v[6]);
    }
    if (log.size() == 0) {
        throw ValidationError(path.string() + ": no samples");
    }
    log.tf = log.t.back();
    if (log.size() > 1) log.ts = log.t[1] - log.t[0];
    for (double u : log.u_ac) log.max_abs_u_ac = std::max(log.max_abs_u_ac, std::abs(u));
    return log;
}

void write_svg_plot(const std::vector<NamedLog>& logs, PlotKind kind, const std::filesystem::path& path) {
    if (logs.empty()) {
        throw ValidationError("plot: no logs");
    }
    for (const auto& l : logs) {
        if (l.log == nullptr) throw ValidationError("plot: null log");
        require_signals(*l.log);
    }

    struct Series {
        std::string label;
        const std::vector<double>* t;
        const std::vector<double>* v;
        std::string colour;
        bool dashed;
    };
    std::vector<Series> series;
    if (kind == PlotKind::Tracking) {
        series.push_back({"reference", &logs.front().log->t, &logs.front().log->r, "#000000", true});
        for (std::size_t i = 0; i < logs.size(); ++i) {
            series.push_back({logs[i].name, &logs[i].log->t, &logs[i].log->y, kPalette[i % 6], false});
        }
    } else {
        for (std::size_t i = 0; i < logs.size(); ++i) {
            series.push_back({logs[i].name, &logs[i].log->t, &logs[i].log->u_ac, kPalette[i % 6], false});
        }
    }

    double t0 = 0.0, t1 = 0.0, v0 = 0.0, v1 = 0.0;
    bool first = true;
    for (const auto& s : series) {
        for (std::size_t k = 0; k < s.t->size(); ++k) {
            const double t = (*s.t)[k], v = (*s.v)[k];
            if (!std::isfinite(v)) continue;
            if (first) {
                t0 = t1 = t;
                v0 = v1 = v;
                first = false;
            }
            t0 = std::min(t0, t);
            t1 = std::max(t1, t);
            v0 = std::min(v0, v);
            v1 = std::max(v1, v);
        }
    }
    if (t1 <= t0) t1 = t0 + 1.0;
    if (v1 <= v0) {
        v0 -= 1.0;
        v1 += 1.0;
    }
    const double pad = 0.05 * (v1 - v0);
    v0 -= pad;
    v1 += pad;

    const double width = 900, height = 420, left = 70, right = 160, top = 30, bottom = 50;
    const double pw = width - left - right, ph = height - top - bottom;
    auto sx = [&](double t) { return left + (t - t0) / (t1 - t0) * pw; };
    auto sy = [&](double v) { return top + (v1 - v) / (v1 - v0) * ph; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    const double tstep = nice_step(t1 - t0, 8), vstep = nice_step(v1 - v0, 6);
    svg << "<g stroke=\"#dddddd\">\n";
    for (double t = std::ceil(t0 / tstep) * tstep; t <= t1 + 1e-9; t += tstep) {
        svg << "<line x1=\"" << sx(t) << "\" y1=\"" << top << "\" x2=\"" << sx(t) << "\" y2=\"" << top + ph
            << "\"/>\n";
    }
    for (double v = std::ceil(v0 / vstep) * vstep; v <= v1 + 1e-9; v += vstep) {
        svg << "<line x1=\"" << left << "\" y1=\"" << sy(v) << "\" x2=\"" << left + pw << "\" y2=\"" << sy(v)
            << "\"/>\n";
    }
    svg << "</g>\n";
    svg << "<g id=\"axes\" stroke=\"black\" fill=\"none\">\n<rect x=\"" << left << "\" y=\"" << top << "\" width=\""
        << pw << "\" height=\"" << ph << "\"/>\n</g>\n";
    svg << "<g id=\"ticks\" fill=\"black\">\n";
    for (double t = std::ceil(t0 / tstep) * tstep; t <= t1 + 1e-9; t += tstep) {
        svg << "<text x=\"" << sx(t) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">"
            << fmt_short(std::abs(t) < 1e-12 ? 0.0 : t) << "</text>\n";
    }
    for (double v = std::ceil(v0 / vstep) * vstep; v <= v1 + 1e-9; v += vstep) {
        svg << "<text x=\"" << left - 6 << "\" y=\"" << sy(v) + 4 << "\" text-anchor=\"end\">"
            << fmt_short(std::abs(v) < 1e-12 ? 0.0 : v) << "</text>\n";
    }
    svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">time (s)</text>\n";
    svg << "<text transform=\"translate(18," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
        << (kind == PlotKind::Tracking ? "heading (deg)" : "actuator u_ac (deg)") << "</text>\n";
    svg << "</g>\n";

    for (const auto& s : series) {
        svg << "<polyline fill=\"none\" stroke=\"" << s.colour << "\" stroke-width=\"1.2\"";
        if (s.dashed) svg << " stroke-dasharray=\"6 4\"";
        svg << " points=\"";
        for (std::size_t k = 0; k < s.t->size(); ++k) {
            const double v = (*s.v)[k];
            if (!std::isfinite(v)) continue;
            svg << fmt_short(sx((*s.t)[k])) << ',' << fmt_short(sy(v)) << ' ';
        }
        svg << "\"><title>" << s.label << "</title></polyline>\n";
    }

    svg << "<g id=\"legend\">\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double y = top + 10 + 18.0 * static_cast<double>(i);
        svg << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << y << "\" x2=\"" << left + pw + 36 << "\" y2=\"" << y
            << "\" stroke=\"" << series[i].colour << "\" stroke-width=\"2\""
            << (series[i].dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
        svg << "<text x=\"" << left + pw + 42 << "\" y=\"" << y + 4 << "\">" << series[i].label << "</text>\n";
    }
    svg << "</g>\n</svg>\n";

    auto out = open_out(path);
    out << svg.str();
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

std::string metrics_json(const std::vector<ControllerReport>& reports) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
        nlohmann::ordered_json o;
        o["controller"] = r.controller;
        if (r.metrics) {
            o["ise"] = r.metrics->ise;
            o["iace"] = r.metrics->iace;
            o["iacer"] = r.metrics->iacer;
        } else {
            o["ise"] = nullptr;
            o["iace"] = nullptr;
            o["iacer"] = nullptr;
        }
        if (r.gm) {
            o["gm"] = r.gm->value;
            o["gm_exceeds_cap"] = r.gm->exceeds_cap;
        } else {
            o["gm"] = nullptr;
            o["gm_exceeds_cap"] = nullptr;
        }
        if (r.dm) {
            o["dm"] = r.dm->value;
            o["dm_exceeds_cap"] = r.dm->exceeds_cap;
        } else {
            o["dm"] = nullptr;
            o["dm_exceeds_cap"] = nullptr;
        }
        o["diverged"] = r.diverged;
        arr.push_back(std::move(o));
    }
    return arr.dump(2) + "\n";
}

void write_metrics_json(const std::vector<ControllerReport>& reports, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << metrics_json(reports);
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

std::vector<ControllerReport> read_metrics_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    const auto doc = nlohmann::json::parse(in);
    std::vector<ControllerReport> out;
    for (const auto& o : doc) {
        ControllerReport r;
        r.controller = o.at("controller").get<std::string>();
        r.diverged = o.value("diverged", false);
        if (!o.at("ise").is_null()) {
            r.metrics = TrackingMetrics{o.at("ise").get<double>(), o.at("iace").get<double>(),
                                        o.at("iacer").get<double>()};
        }
        if (!o.at("gm").is_null()) {
            MarginResult m;
            m.value = o.at("gm").get<double>();
            m.exceeds_cap = o.at("gm_exceeds_cap").get<bool>();
            r.gm = m;
        }
        if (!o.at("dm").is_null()) {
            MarginResult m;
            m.value = o.at("dm").get<double>();
            m.exceeds_cap = o.at("dm_exceeds_cap").get<bool>();
            r.dm = m;
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace awbench
