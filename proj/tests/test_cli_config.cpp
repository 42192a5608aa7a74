#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

#include "liqsim/artifacts.hpp"
#include "liqsim/config.hpp"
#include "liqsim/errors.hpp"

using namespace liqsim;
namespace fs = std::filesystem;

TEST_CASE("config round trip") {
    ExperimentConfig config;
    config.eval.market.mu = 0.05;
    config.eval.n_paths = 777;
    config.eval.scheme = Scheme::ExactLog;
    config.eval.bridge_correction = true;
    config.eval.innovation = InnovationSource::TrueDrift;
    config.out_dir = "elsewhere";
    const ExperimentConfig back = parse_config(emit_config(config));
    CHECK(back == config);
    CHECK(config_hash(back) == config_hash(config));

    ExperimentConfig other = config;
    other.eval.rng.seed = 999;
    CHECK(config_hash(other) != config_hash(config));
}

TEST_CASE("config validation errors") {
    CHECK_THROWS_AS(parse_config("not json"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"no_such_key": 1})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"alpha": 1.5})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"n_paths": 0})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"scheme": "heun"})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"k_hi": 1.0})"), ConfigError);
    CHECK_NOTHROW(parse_config("{}"));  // all defaults
}

TEST_CASE("manifest lists exactly the files on disk") {
    const fs::path dir = fs::temp_directory_path() / "liqsim_manifest_test";
    fs::remove_all(dir);
    {
        RunManifest manifest(dir.string(), "deadbeef", 42);
        write_text_file(manifest.path_for("a.csv"), "x\n1\n");
        write_text_file(manifest.path_for("b.json"), "{}\n");
        manifest.write(0.5);
    }
    std::set<std::string> on_disk;
    for (const auto& entry : fs::directory_iterator(dir))
        on_disk.insert(entry.path().filename().string());

    std::ifstream in(dir / "manifest.json");
    nlohmann::json j;
    in >> j;
    std::set<std::string> listed(j.at("files").begin(), j.at("files").end());
    CHECK(on_disk == listed);
    CHECK(j.at("seed") == 42);
    CHECK(j.at("config_hash") == "deadbeef");
    fs::remove_all(dir);
}

TEST_CASE("impact figure curves dip to 1-K at their own time scale") {
    const Trace tr = impact_trace({ImpactDraw(0.05, 0.1), ImpactDraw(0.1, 0.1)}, 0.6, 301);
    REQUIRE(tr.series.size() == 2);
    for (std::size_t s = 0; s < 2; ++s) {
        const double theta = s == 0 ? 0.05 : 0.1;
        double min_v = 2.0, min_t = -1.0;
        for (std::size_t i = 0; i < tr.x.size(); ++i) {
            if (tr.series[s].y[i] < min_v) {
                min_v = tr.series[s].y[i];
                min_t = tr.x[i];
            }
        }
        CHECK(min_v == doctest::Approx(0.9).epsilon(1e-9));
        CHECK(min_t == doctest::Approx(theta).epsilon(1e-9));
        CHECK(tr.series[s].y.front() == 1.0);
    }
}

TEST_CASE("grid traces carry one value per grid point") {
    EvalConfig cfg;
    cfg.n_paths = 4000;
    const Trace filter = filter_trace(cfg, ImpactDraw(0.1, 0.05));
    CHECK(filter.x.size() == static_cast<std::size_t>(cfg.steps + 1));
    CHECK(filter.series.size() == 2);
    for (const Series& s : filter.series) CHECK(s.y.size() == filter.x.size());

    const Trace drift = drift_trace(cfg, ImpactDraw(0.1, 0.1));
    CHECK(drift.x.size() == static_cast<std::size_t>(cfg.steps + 1));
    // the drift series shows the downward jump at the trigger and
    // relaxes back toward the flat level afterward
    const auto& mu = drift.series[0].y;
    double min_mu = 1e9;
    for (double v : mu) min_mu = std::min(min_mu, v);
    CHECK(min_mu < -1.0);
    CHECK(mu.front() == doctest::Approx(cfg.market.mu));
    CHECK(std::abs(mu.back() - cfg.market.mu) < std::abs(min_mu - cfg.market.mu));
}

TEST_CASE("trace csv layout") {
    Trace tr;
    tr.x_name = "t";
    tr.x = {0.0, 1.0};
    tr.series = {{"a", {2.0, 3.0}}, {"b", {4.0, 5.0}}};
    const fs::path file = fs::temp_directory_path() / "liqsim_trace_test.csv";
    write_trace_csv(tr, file.string());
    std::ifstream in(file);
    std::string line;
    std::getline(in, line);
    CHECK(line == "step,t,a,b");
    std::getline(in, line);
    CHECK(line == "0,0,2,4");
    std::getline(in, line);
    CHECK(line == "1,1,3,5");
    fs::remove(file);
}
