#include "liqsim/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "liqsim/errors.hpp"

namespace liqsim {

bool operator==(const RngSpec& a, const RngSpec& b) {
    return a.seed == b.seed && a.stream_id == b.stream_id;
}
bool operator==(const Interval& a, const Interval& b) { return a.lo == b.lo && a.hi == b.hi; }
bool operator==(const MarketParams& a, const MarketParams& b) {
    return a.mu == b.mu && a.sigma == b.sigma && a.s0 == b.s0 && a.alpha == b.alpha &&
           a.horizon == b.horizon;
}
bool operator==(const EvalConfig& a, const EvalConfig& b) {
    return a.market == b.market && a.theta_range == b.theta_range && a.k_range == b.k_range &&
           a.steps == b.steps && a.n_paths == b.n_paths && a.x0 == b.x0 && a.p == b.p &&
           a.rng == b.rng && a.scheme == b.scheme &&
           a.bridge_correction == b.bridge_correction && a.innovation == b.innovation &&
           a.cloud_theta == b.cloud_theta && a.cloud_k == b.cloud_k &&
           a.chunk_size == b.chunk_size;
}

namespace {

using json = nlohmann::json;

const std::set<std::string> kKnownKeys = {
    "mu",      "sigma",       "s0",          "alpha",      "horizon",    "theta_lo",
    "theta_hi", "k_lo",       "k_hi",        "steps",      "n_paths",    "x0",
    "p",       "seed",        "stream_id",   "scheme",     "bridge_correction",
    "innovation", "cloud_theta", "cloud_k",  "chunk_size", "out_dir",    "n_demo"};

std::string scheme_name(Scheme s) { return s == Scheme::Euler ? "euler" : "exact-log"; }
Scheme scheme_from(const std::string& s) {
    if (s == "euler") return Scheme::Euler;
    if (s == "exact-log") return Scheme::ExactLog;
    throw ConfigError("unknown scheme '" + s + "' (use euler or exact-log)");
}
std::string innovation_name(InnovationSource s) {
    return s == InnovationSource::ObservedPrices ? "observed" : "true-drift";
}
InnovationSource innovation_from(const std::string& s) {
    if (s == "observed") return InnovationSource::ObservedPrices;
    if (s == "true-drift") return InnovationSource::TrueDrift;
    throw ConfigError("unknown innovation source '" + s + "' (use observed or true-drift)");
}

}  // namespace

std::string emit_config(const ExperimentConfig& c) {
    json j;
    j["mu"] = c.eval.market.mu;
    j["sigma"] = c.eval.market.sigma;
    j["s0"] = c.eval.market.s0;
    j["alpha"] = c.eval.market.alpha;
    j["horizon"] = c.eval.market.horizon;
    j["theta_lo"] = c.eval.theta_range.lo;
    j["theta_hi"] = c.eval.theta_range.hi;
    j["k_lo"] = c.eval.k_range.lo;
    j["k_hi"] = c.eval.k_range.hi;
    j["steps"] = c.eval.steps;
    j["n_paths"] = c.eval.n_paths;
    j["x0"] = c.eval.x0;
    j["p"] = c.eval.p;
    j["seed"] = c.eval.rng.seed;
    j["stream_id"] = c.eval.rng.stream_id;
    j["scheme"] = scheme_name(c.eval.scheme);
    j["bridge_correction"] = c.eval.bridge_correction;
    j["innovation"] = innovation_name(c.eval.innovation);
    j["cloud_theta"] = c.eval.cloud_theta;
    j["cloud_k"] = c.eval.cloud_k;
    j["chunk_size"] = c.eval.chunk_size;
    j["out_dir"] = c.out_dir;
    j["n_demo"] = c.n_demo;
    return j.dump(2) + "\n";
}

ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (!kKnownKeys.count(key)) throw ConfigError("unknown config key '" + key + "'");
    }

    ExperimentConfig c;
    try {
        auto get = [&](const char* key, auto& slot) {
            if (j.contains(key)) slot = j.at(key).get<std::decay_t<decltype(slot)>>();
        };
        get("mu", c.eval.market.mu);
        get("sigma", c.eval.market.sigma);
        get("s0", c.eval.market.s0);
        get("alpha", c.eval.market.alpha);
        get("horizon", c.eval.market.horizon);
        get("theta_lo", c.eval.theta_range.lo);
        get("theta_hi", c.eval.theta_range.hi);
        get("k_lo", c.eval.k_range.lo);
        get("k_hi", c.eval.k_range.hi);
        get("steps", c.eval.steps);
        get("n_paths", c.eval.n_paths);
        get("x0", c.eval.x0);
        get("p", c.eval.p);
        get("seed", c.eval.rng.seed);
        get("stream_id", c.eval.rng.stream_id);
        if (j.contains("scheme")) c.eval.scheme = scheme_from(j.at("scheme").get<std::string>());
        get("bridge_correction", c.eval.bridge_correction);
        if (j.contains("innovation"))
            c.eval.innovation = innovation_from(j.at("innovation").get<std::string>());
        get("cloud_theta", c.eval.cloud_theta);
        get("cloud_k", c.eval.cloud_k);
        get("chunk_size", c.eval.chunk_size);
        get("out_dir", c.out_dir);
        get("n_demo", c.n_demo);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }

    try {
        c.eval.market.validate();
        ImpactDistribution probe(c.eval.theta_range, c.eval.k_range);
        (void)probe;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid configuration: ") + e.what());
    }
    if (c.eval.steps < 1) throw ConfigError("steps must be >= 1");
    if (c.eval.n_paths < 1) throw ConfigError("n_paths must be >= 1");
    if (!(c.eval.x0 > 0.0)) throw ConfigError("x0 must be > 0");
    if (!(c.eval.p > 0.0 && c.eval.p < 1.0)) throw ConfigError("p must lie in (0,1)");
    if (c.eval.cloud_theta < 1 || c.eval.cloud_k < 1)
        throw ConfigError("cloud sizes must be >= 1");
    if (c.n_demo < 64) throw ConfigError("n_demo must be >= 64");
    return c;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string config_hash(const ExperimentConfig& config) {
    const std::string text = emit_config(config);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace liqsim
