// Command-line front end: experiment presets that reproduce the
// reference tables and figures, plus path dumps and analytic values.

#include <chrono>
#include <fstream>
#include <cmath>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "liqsim/artifacts.hpp"
#include "liqsim/config.hpp"
#include "liqsim/errors.hpp"

namespace {

using liqsim::EvalConfig;
using liqsim::ExperimentConfig;
using nlohmann::json;

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> paths;
    std::optional<int> steps;
    std::optional<std::string> scheme;
    std::optional<std::string> bridge;
    std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "Config file (flat JSON)");
    cmd->add_option("--seed", flags.seed, "RNG seed");
    cmd->add_option("--paths", flags.paths, "Number of Monte-Carlo paths");
    cmd->add_option("--steps", flags.steps, "Euler steps over the horizon");
    cmd->add_option("--scheme", flags.scheme, "euler | exact-log");
    cmd->add_option("--bridge-correction", flags.bridge, "on | off");
    cmd->add_option("--out", flags.out, "Output directory");
}

ExperimentConfig resolve(const CommonFlags& flags) {
    ExperimentConfig config;
    if (!flags.config_path.empty()) config = liqsim::load_config_file(flags.config_path);
    if (flags.seed) config.eval.rng.seed = *flags.seed;
    if (flags.paths) config.eval.n_paths = *flags.paths;
    if (flags.steps) config.eval.steps = *flags.steps;
    if (flags.scheme) {
        if (*flags.scheme == "euler")
            config.eval.scheme = liqsim::Scheme::Euler;
        else if (*flags.scheme == "exact-log")
            config.eval.scheme = liqsim::Scheme::ExactLog;
        else
            throw liqsim::ConfigError("--scheme must be euler or exact-log");
    }
    if (flags.bridge) {
        if (*flags.bridge == "on")
            config.eval.bridge_correction = true;
        else if (*flags.bridge == "off")
            config.eval.bridge_correction = false;
        else
            throw liqsim::ConfigError("--bridge-correction must be on or off");
    }
    if (flags.out) config.out_dir = *flags.out;
    // Round-trip through the parser so flag-injected values face the
    // same validation as file input.
    return liqsim::parse_config(liqsim::emit_config(config));
}

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(clock::now() - start_).count();
    }

private:
    using clock = std::chrono::steady_clock;
    clock::time_point start_ = clock::now();
};

json estimate_json(const liqsim::Estimate& e) {
    return json{{"mean", e.mean},       {"se", e.se},
                {"rse", e.rse},         {"ci95", {e.ci_lo, e.ci_hi}},
                {"n", e.n_effective},   {"n_excluded", e.n_excluded}};
}

int cmd_simulate(const ExperimentConfig& config) {
    Timer timer;
    liqsim::RunManifest manifest(config.out_dir, liqsim::config_hash(config),
                                 config.eval.rng.seed);
    const liqsim::TimeGrid grid = config.eval.grid();
    const liqsim::ImpactDistribution dist = config.eval.distribution();
    const liqsim::BatchOptions options{config.eval.scheme, config.eval.bridge_correction};

    // streamed row by row: the default configuration produces ~2.5e7 rows
    const std::string csv_path = manifest.path_for("paths.csv");
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw liqsim::ConfigError("cannot write '" + csv_path + "'");
    csv.precision(12);
    csv << "path_id,step,t,s_fund,s_market,run_min,tau_flag\n";
    for (int i = 0; i < config.eval.n_paths; ++i) {
        const liqsim::SimulatedPath path = liqsim::simulate_path(
            grid, config.eval.market, dist, config.eval.rng, i, options);
        for (int m = 0; m <= grid.steps; ++m) {
            const int tau_flag = path.tau_index && m >= *path.tau_index ? 1 : 0;
            csv << i << ',' << m << ',' << grid.time(m) << ',' << path.s_fund[m] << ','
                << path.s_market[m] << ',' << path.run_min[m] << ',' << tau_flag << "\n";
        }
    }
    csv.close();
    if (!csv) throw liqsim::ConfigError("write failed for '" + csv_path + "'");
    liqsim::write_text_file(manifest.path_for("config.json"), liqsim::emit_config(config));
    manifest.write(timer.seconds());
    std::cout << "wrote " << config.out_dir << "/paths.csv ("
              << static_cast<long long>(config.eval.n_paths) * (grid.steps + 1) << " rows)\n";
    return 0;
}

int cmd_figures(const ExperimentConfig& config, const std::string& which) {
    Timer timer;
    liqsim::RunManifest manifest(config.out_dir, liqsim::config_hash(config),
                                 config.eval.rng.seed);
    auto emit = [&](const liqsim::Trace& tr, const std::string& stem, const std::string& title) {
        liqsim::write_trace_csv(tr, manifest.path_for(stem + ".csv"));
        liqsim::write_trace_svg(tr, title, manifest.path_for(stem + ".svg"));
    };

    const liqsim::ImpactDraw scenario(0.1, 0.05);
    if (which == "impact" || which == "all") {
        emit(liqsim::impact_trace({liqsim::ImpactDraw(0.05, 0.1), liqsim::ImpactDraw(0.1, 0.1)},
                                  0.6, 301),
             "impact", "Temporary impact factor");
        emit(liqsim::impact4_trace({liqsim::ImpactDraw4(0.05, 0.1, 0.05, 0.05)}, 0.8, 301),
             "impact4", "Two-scale impact factor");
    }
    if (which == "drift" || which == "all")
        emit(liqsim::drift_trace(config.eval, liqsim::ImpactDraw(0.1, 0.1)), "drift",
             "Market drift through liquidation");
    if (which == "filter" || which == "all")
        emit(liqsim::filter_trace(config.eval, scenario), "filter",
             "Filtered vs realized drift");
    if (which == "strategy" || which == "all") {
        emit(liqsim::strategy_log_trace(config.eval, scenario), "strategy_log",
             "Log-utility fractions");
        emit(liqsim::strategy_power_trace(config.eval, config.n_demo), "strategy_power",
             "Power-utility fractions (BSDE)");
    }
    manifest.write(timer.seconds());
    std::cout << "figures written to " << config.out_dir << "\n";
    return 0;
}

int cmd_tables(const ExperimentConfig& config) {
    Timer timer;
    liqsim::RunManifest manifest(config.out_dir, liqsim::config_hash(config),
                                 config.eval.rng.seed);
    const liqsim::TableResults r = liqsim::run_tables(config.eval);

    const std::string scheme =
        config.eval.scheme == liqsim::Scheme::Euler ? "euler" : "exact-log";
    auto record = [&](const char* investor, const char* utility, const liqsim::Estimate& e) {
        json rec = estimate_json(e);
        rec["investor"] = investor;
        rec["utility"] = utility;
        rec["seed"] = config.eval.rng.seed;
        rec["scheme"] = scheme;
        rec["M"] = config.eval.steps;
        return rec;
    };
    json j;
    j["evaluations"] = json::array({record("fully_informed", "power", r.power_full),
                                    record("partially_informed", "power", r.power_partial),
                                    record("uninformed", "power", r.power_uninformed),
                                    record("fully_informed", "log", r.log_full),
                                    record("partially_informed", "log", r.log_partial),
                                    record("uninformed", "log", r.log_uninformed)});
    j["martingale_check"] = {{"L", estimate_json(r.martingale_l)},
                             {"L_bar", estimate_json(r.martingale_lbar)}};
    j["n_paths"] = r.n_paths;
    j["n_liquidated"] = r.n_liquidated;
    liqsim::write_text_file(manifest.path_for("tables.json"), j.dump(2) + "\n");

    std::ostringstream txt;
    auto row = [&](const char* name, const liqsim::Estimate& e) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-20s %12.4f    %8.4f    [%.4f, %.4f]   excl %lld\n",
                      name, e.mean, e.rse, e.ci_lo, e.ci_hi,
                      static_cast<long long>(e.n_excluded));
        txt << buf;
    };
    txt << "Optimal expected power utilities (p = " << config.eval.p << ")\n";
    txt << "investor                     mean         RSE    95% CI\n";
    row("Fully informed", r.power_full);
    row("Partially informed", r.power_partial);
    row("Uninformed", r.power_uninformed);
    txt << "\nOptimal expected log utilities\n";
    txt << "investor                     mean         RSE    95% CI\n";
    row("Fully informed", r.log_full);
    row("Partially informed", r.log_partial);
    row("Uninformed", r.log_uninformed);
    txt << "\npaths " << r.n_paths << ", liquidated " << r.n_liquidated << ", E[L_T] = "
        << r.martingale_l.mean << ", E[Lbar_T] = " << r.martingale_lbar.mean << "\n";
    liqsim::write_text_file(manifest.path_for("tables.txt"), txt.str());
    manifest.write(timer.seconds());
    std::cout << txt.str();
    return 0;
}

int cmd_closed_form(const ExperimentConfig& config) {
    Timer timer;
    liqsim::RunManifest manifest(config.out_dir, liqsim::config_hash(config),
                                 config.eval.rng.seed);
    const EvalConfig& e = config.eval;
    const liqsim::ImpactDistribution dist = e.distribution();
    const liqsim::QuadratureSpec quad;

    json out = json::array();
    auto record = [&](const char* investor, const char* utility, double value, double se) {
        out.push_back({{"investor", investor},
                       {"utility", utility},
                       {"value", value},
                       {"se_if_any", se},
                       {"quadrature_error", quad.rel_tol}});
    };
    record("uninformed", "log", liqsim::v_log_uninformed(e.market, dist, e.x0, quad), 0.0);
    record("uninformed", "power",
           liqsim::v_power_uninformed(e.market, dist, e.x0, e.p, quad), 0.0);
    record("fully_informed", "log", liqsim::v_log_fully_avg(e.market, dist, e.x0, quad), 0.0);
    const liqsim::McValue partial =
        liqsim::v_log_partial(e.market, dist, e.x0, {}, e.rng, quad);
    record("partially_informed", "log", partial.value, partial.se);

    liqsim::write_text_file(manifest.path_for("closed_form.json"), out.dump(2) + "\n");
    manifest.write(timer.seconds());
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_filter_demo(const ExperimentConfig& config) {
    Timer timer;
    liqsim::RunManifest manifest(config.out_dir, liqsim::config_hash(config),
                                 config.eval.rng.seed);
    const liqsim::ImpactDraw scenario(0.1, 0.05);
    const liqsim::Trace tr = liqsim::filter_trace(config.eval, scenario);
    liqsim::write_trace_csv(tr, manifest.path_for("filter.csv"));
    liqsim::write_trace_svg(tr, "Filtered vs realized drift", manifest.path_for("filter.svg"));

    // RMSE of the filter against the realized drift from the trigger
    // on, versus the prior-mean drift curve that never updates.
    const auto& realized = tr.series[0].y;
    const auto& filtered = tr.series[1].y;
    const liqsim::TimeGrid grid = config.eval.grid();
    const liqsim::ImpactDistribution dist = config.eval.distribution();
    const auto nodes = dist.gauss_nodes(config.eval.cloud_theta, config.eval.cloud_k);
    int first = -1;
    for (std::size_t m = 0; m < realized.size(); ++m) {
        if (realized[m] != config.eval.market.mu) {
            first = static_cast<int>(m);
            break;
        }
    }
    double filter_sq = 0.0, prior_sq = 0.0;
    int count = 0;
    if (first >= 0) {
        for (std::size_t m = first; m < realized.size(); ++m) {
            double prior_mu = 0.0;
            for (const auto& node : nodes) {
                prior_mu += node.weight *
                            liqsim::drift_impacted((m - first) * grid.dt, 0.0,
                                                   liqsim::ImpactDraw(node.theta, node.k),
                                                   config.eval.market);
            }
            filter_sq += (filtered[m] - realized[m]) * (filtered[m] - realized[m]);
            prior_sq += (prior_mu - realized[m]) * (prior_mu - realized[m]);
            ++count;
        }
    }
    json j;
    j["post_liquidation_steps"] = count;
    j["rmse_filter"] = count ? std::sqrt(filter_sq / count) : 0.0;
    j["rmse_prior_baseline"] = count ? std::sqrt(prior_sq / count) : 0.0;
    liqsim::write_text_file(manifest.path_for("filter_demo.json"), j.dump(2) + "\n");
    manifest.write(timer.seconds());
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_bsde_demo(const ExperimentConfig& config) {
    Timer timer;
    liqsim::RunManifest manifest(config.out_dir, liqsim::config_hash(config),
                                 config.eval.rng.seed);
    const EvalConfig& e = config.eval;
    const liqsim::TimeGrid grid = e.grid();

    std::ostringstream diag;
    diag.precision(10);
    diag << "step";
    for (int i = 0; i < 6; ++i) diag << ",c_h" << i;
    for (int i = 0; i < 6; ++i) diag << ",c_z" << i;
    diag << ",r2_h\n";
    std::vector<std::string> rows;
    auto callback = [&](const liqsim::BsdeStepDiagnostics& d) {
        std::ostringstream row;
        row.precision(10);
        row << d.m;
        for (double c : d.coef_h) row << ',' << c;
        for (double c : d.coef_z) row << ',' << c;
        row << ',' << d.r2_h << "\n";
        rows.push_back(row.str());
    };

    const liqsim::Trace tr = liqsim::strategy_power_trace(e, config.n_demo);
    liqsim::write_trace_csv(tr, manifest.path_for("strategy_power.csv"));
    liqsim::write_trace_svg(tr, "Power-utility fractions (BSDE)",
                            manifest.path_for("strategy_power.svg"));

    // No-liquidation configuration: H0 has a closed form to compare to.
    EvalConfig flat = e;
    flat.market.alpha = 1e-9;
    const liqsim::ImpactDistribution dist = flat.distribution();
    std::vector<liqsim::SimulatedPath> batch;
    for (int i = 0; i < config.n_demo; ++i)
        batch.push_back(liqsim::simulate_path(grid, flat.market, dist, flat.rng, i,
                                              {flat.scheme, false}));
    liqsim::BsdeConfig bcfg;
    bcfg.p = e.p;
    const liqsim::BsdeSolution sol = liqsim::solve_backward(batch, grid, flat.market, bcfg,
                                                            callback);
    for (auto it = rows.rbegin(); it != rows.rend(); ++it) diag << *it;
    liqsim::write_text_file(manifest.path_for("bsde_diagnostics.csv"), diag.str());

    const double h0 = sol.h_at(0, 0);
    const double q = 1.0 - e.p;
    const double closed = std::exp(e.p * flat.market.mu * flat.market.mu * flat.market.horizon /
                                   (2.0 * q * q * flat.market.sigma * flat.market.sigma));
    json j;
    j["h0_regression"] = h0;
    j["h0_closed_form_constant_drift"] = closed;
    j["relative_error"] = std::abs(h0 - closed) / closed;
    liqsim::write_text_file(manifest.path_for("bsde_demo.json"), j.dump(2) + "\n");
    manifest.write(timer.seconds());
    std::cout << j.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Disorderly-liquidation market simulator and utility evaluator"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string which = "all";

    CLI::App* simulate = app.add_subcommand("simulate", "Dump simulated paths to CSV");
    add_common(simulate, flags);
    CLI::App* figures = app.add_subcommand("figures", "Emit figure CSV/SVG artifacts");
    add_common(figures, flags);
    figures->add_option("--which", which, "impact | drift | filter | strategy | all");
    CLI::App* tables = app.add_subcommand("tables", "Reproduce the utility tables");
    add_common(tables, flags);
    CLI::App* closed = app.add_subcommand("closed-form", "Analytic expected utilities");
    add_common(closed, flags);
    CLI::App* filter_demo = app.add_subcommand("filter-demo", "Filter trace and RMSE demo");
    add_common(filter_demo, flags);
    CLI::App* bsde_demo = app.add_subcommand("bsde-demo", "BSDE diagnostics and strategies");
    add_common(bsde_demo, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const ExperimentConfig config = resolve(flags);
        if (simulate->parsed()) return cmd_simulate(config);
        if (figures->parsed()) {
            if (which != "impact" && which != "drift" && which != "filter" &&
                which != "strategy" && which != "all")
                throw liqsim::ConfigError("--which must be impact|drift|filter|strategy|all");
            return cmd_figures(config, which);
        }
        if (tables->parsed()) return cmd_tables(config);
        if (closed->parsed()) return cmd_closed_form(config);
        if (filter_demo->parsed()) return cmd_filter_demo(config);
        if (bsde_demo->parsed()) return cmd_bsde_demo(config);
        return 2;
    } catch (const liqsim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const liqsim::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
