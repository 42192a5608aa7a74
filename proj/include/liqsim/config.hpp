#pragma once

#include <string>

#include "liqsim/experiments.hpp"

namespace liqsim {

// Flat, human-editable experiment configuration. Defaults are the
// reference parameter set, so running the tables with no arguments is
// the reproduction run.
struct ExperimentConfig {
    EvalConfig eval{};
    std::string out_dir = "out";
    int n_demo = 4096;  // demo batch for the BSDE strategy figures

    bool operator==(const ExperimentConfig&) const = default;
};

// operator== on EvalConfig pieces (needed for the round-trip contract).
bool operator==(const RngSpec& a, const RngSpec& b);
bool operator==(const Interval& a, const Interval& b);
bool operator==(const MarketParams& a, const MarketParams& b);
bool operator==(const EvalConfig& a, const EvalConfig& b);

// Flat JSON round-trip; parse(emit(c)) == c. Unknown keys are a
// ConfigError, as are invalid values.
std::string emit_config(const ExperimentConfig& config);
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config_file(const std::string& path);

// FNV-1a hash of the canonical emitted form.
std::string config_hash(const ExperimentConfig& config);

}  // namespace liqsim
