#pragma once

#include <string>
#include <vector>

#include "liqsim/experiments.hpp"

namespace liqsim {

// Collects everything a run writes; identical config+seed produce
// byte-identical artifacts, and the manifest lists exactly the files on
// disk after the run (itself included).
class RunManifest {
public:
    RunManifest(std::string out_dir, std::string config_hash, std::uint64_t seed);

    const std::string& out_dir() const { return out_dir_; }

    // Registers and returns the full path for a file about to be written.
    std::string path_for(const std::string& filename);

    // Writes <out_dir>/manifest.json; call last.
    void write(double wall_clock_seconds);

private:
    std::string out_dir_;
    std::string config_hash_;
    std::uint64_t seed_;
    std::vector<std::string> files_;
};

// Trace -> CSV with an x column followed by one column per series.
void write_trace_csv(const Trace& trace, const std::string& path);

// Minimal standalone SVG line chart for a trace.
void write_trace_svg(const Trace& trace, const std::string& title, const std::string& path);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace liqsim
