#include "liqsim/artifacts.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "liqsim/errors.hpp"

namespace liqsim {

namespace fs = std::filesystem;

RunManifest::RunManifest(std::string out_dir, std::string config_hash, std::uint64_t seed)
    : out_dir_(std::move(out_dir)), config_hash_(std::move(config_hash)), seed_(seed) {
    std::error_code ec;
    fs::create_directories(out_dir_, ec);
    if (ec) throw ConfigError("cannot create output directory '" + out_dir_ + "': " + ec.message());
}

std::string RunManifest::path_for(const std::string& filename) {
    files_.push_back(filename);
    return (fs::path(out_dir_) / filename).string();
}

void RunManifest::write(double wall_clock_seconds) {
    nlohmann::json j;
    j["config_hash"] = config_hash_;
    j["seed"] = seed_;
    j["artifact_version"] = "1.0.0";
    j["wall_clock_seconds"] = wall_clock_seconds;
    std::vector<std::string> files = files_;
    files.push_back("manifest.json");
    std::sort(files.begin(), files.end());
    j["files"] = files;
    write_text_file((fs::path(out_dir_) / "manifest.json").string(), j.dump(2) + "\n");
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << content;
    if (!out) throw ConfigError("write failed for '" + path + "'");
}

void write_trace_csv(const Trace& trace, const std::string& path) {
    std::ostringstream out;
    out.precision(12);
    out << "step," << trace.x_name;
    for (const Series& s : trace.series) out << "," << s.name;
    out << "\n";
    for (std::size_t i = 0; i < trace.x.size(); ++i) {
        out << i << "," << trace.x[i];
        for (const Series& s : trace.series) out << "," << s.y[i];
        out << "\n";
    }
    write_text_file(path, out.str());
}

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 440;
constexpr int kMargin = 56;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
}

}  // namespace

void write_trace_svg(const Trace& trace, const std::string& title, const std::string& path) {
    double x_lo = trace.x.empty() ? 0.0 : trace.x.front();
    double x_hi = trace.x.empty() ? 1.0 : trace.x.back();
    double y_lo = std::numeric_limits<double>::infinity();
    double y_hi = -std::numeric_limits<double>::infinity();
    for (const Series& s : trace.series) {
        for (double v : s.y) {
            y_lo = std::min(y_lo, v);
            y_hi = std::max(y_hi, v);
        }
    }
    if (!(y_hi > y_lo)) {
        y_lo -= 1.0;
        y_hi += 1.0;
    }
    const double pad = 0.05 * (y_hi - y_lo);
    y_lo -= pad;
    y_hi += pad;
    if (!(x_hi > x_lo)) x_hi = x_lo + 1.0;

    auto px = [&](double x) {
        return kMargin + (x - x_lo) / (x_hi - x_lo) * (kWidth - 2 * kMargin);
    };
    auto py = [&](double y) {
        return kHeight - kMargin - (y - y_lo) / (y_hi - y_lo) * (kHeight - 2 * kMargin);
    };

    std::ostringstream svg;
    svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='"
        << kHeight << "' viewBox='0 0 " << kWidth << " " << kHeight << "'>\n";
    svg << "<rect width='100%' height='100%' fill='white'/>\n";
    svg << "<text x='" << kWidth / 2 << "' y='24' text-anchor='middle' font-family='sans-serif'"
        << " font-size='15'>" << title << "</text>\n";
    // axes
    svg << "<line x1='" << kMargin << "' y1='" << kHeight - kMargin << "' x2='"
        << kWidth - kMargin << "' y2='" << kHeight - kMargin
        << "' stroke='black' stroke-width='1'/>\n";
    svg << "<line x1='" << kMargin << "' y1='" << kMargin << "' x2='" << kMargin << "' y2='"
        << kHeight - kMargin << "' stroke='black' stroke-width='1'/>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double xv = x_lo + tick * (x_hi - x_lo) / 4.0;
        const double yv = y_lo + tick * (y_hi - y_lo) / 4.0;
        svg << "<text x='" << px(xv) << "' y='" << kHeight - kMargin + 18
            << "' text-anchor='middle' font-family='sans-serif' font-size='11'>" << fmt(xv)
            << "</text>\n";
        svg << "<text x='" << kMargin - 6 << "' y='" << py(yv) + 4
            << "' text-anchor='end' font-family='sans-serif' font-size='11'>" << fmt(yv)
            << "</text>\n";
    }
    svg << "<text x='" << kWidth / 2 << "' y='" << kHeight - 12
        << "' text-anchor='middle' font-family='sans-serif' font-size='12'>" << trace.x_name
        << "</text>\n";

    for (std::size_t s = 0; s < trace.series.size(); ++s) {
        const char* color = kPalette[s % 6];
        svg << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
        for (std::size_t i = 0; i < trace.x.size(); ++i) {
            svg << px(trace.x[i]) << "," << py(trace.series[s].y[i]) << " ";
        }
        svg << "'/>\n";
        svg << "<text x='" << kWidth - kMargin - 4 << "' y='" << kMargin + 16 * (s + 1)
            << "' text-anchor='end' font-family='sans-serif' font-size='12' fill='" << color
            << "'>" << trace.series[s].name << "</text>\n";
    }
    svg << "</svg>\n";
    write_text_file(path, svg.str());
}

}  // namespace liqsim
