#include "liqsim/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "liqsim/errors.hpp"
#include "liqsim/parallel.hpp"

namespace liqsim {

namespace {

// Everything one path contributes to the tables. NaN marks a bankrupt
// (excluded) wealth evaluation.
struct PathRecord {
    double log_uninformed = 0.0;
    double log_partial = 0.0;
    double log_full = 0.0;
    double power_uninformed = 0.0;
    double xi_full = 0.0;
    double xi_partial = 0.0;
    double l_full = 0.0;
    double l_bar = 0.0;
    bool liquidated = false;
};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

PathRecord evaluate_path(const SimulatedPath& path, const TimeGrid& grid,
                         const MarketParams& params, double p, double x0,
                         const FilterContext& ctx, InnovationSource innovation) {
    PathRecord rec;
    rec.liquidated = path.tau_index.has_value();

    const FilterOutput filter = run_filter(path, ctx, innovation);
    const auto log_u = UtilitySpec::log_utility();
    const auto pow_u = UtilitySpec::power_utility(p);

    auto util = [&](InvestorKind kind, const UtilitySpec& u, const FilterOutput* fo) {
        const auto v = wealth_utility_terminal(path, grid, params, kind, u, x0, fo);
        return v ? *v : kNaN;
    };
    rec.log_uninformed = util(InvestorKind::Uninformed, log_u, nullptr);
    rec.log_full = util(InvestorKind::FullyInformed, log_u, nullptr);
    rec.log_partial = util(InvestorKind::PartiallyInformed, log_u, &filter);
    rec.power_uninformed = util(InvestorKind::Uninformed, pow_u, nullptr);

    rec.l_full = likelihood_terminal(path, grid, params, InvestorKind::FullyInformed, nullptr);
    rec.l_bar =
        likelihood_terminal(path, grid, params, InvestorKind::PartiallyInformed, &filter);
    const double expo = p / (p - 1.0);
    rec.xi_full = std::pow(rec.l_full, expo);
    rec.xi_partial = std::pow(rec.l_bar, expo);
    return rec;
}

struct StatWithExclusions {
    RunningStat stat;
    long long excluded = 0;

    void add(double v) {
        if (std::isnan(v)) {
            ++excluded;
        } else {
            stat.add(v);
        }
    }
    Estimate estimate() const { return estimate_from_stat(stat, excluded); }
};

}  // namespace

TableResults run_tables(const EvalConfig& cfg) {
    const TimeGrid grid = cfg.grid();
    const MarketParams& params = cfg.market;
    const ImpactDistribution dist = cfg.distribution();
    const ParticleCloud cloud = ParticleCloud::tensor_grid(dist, cfg.cloud_theta, cfg.cloud_k);
    const FilterContext ctx(cloud, grid, params);
    const BatchOptions options{cfg.scheme, cfg.bridge_correction};

    StatWithExclusions log_unf, log_part, log_full, pow_unf;
    RunningStat xi_full, xi_part, l_mart, lbar_mart;
    long long n_liquidated = 0;

    const int chunk = std::max(1, cfg.chunk_size);
    std::vector<PathRecord> records(chunk);
    for (int begin = 0; begin < cfg.n_paths; begin += chunk) {
        const int count = std::min(chunk, cfg.n_paths - begin);
        parallel_for(0, count, [&](int i) {
            const SimulatedPath path =
                simulate_path(grid, params, dist, cfg.rng,
                              static_cast<std::uint64_t>(begin + i), options);
            records[i] = evaluate_path(path, grid, params, cfg.p, cfg.x0, ctx,
                                       cfg.innovation);
        });
        for (int i = 0; i < count; ++i) {  // fixed-order reduction
            const PathRecord& r = records[i];
            log_unf.add(r.log_uninformed);
            log_part.add(r.log_partial);
            log_full.add(r.log_full);
            pow_unf.add(r.power_uninformed);
            xi_full.add(r.xi_full);
            xi_part.add(r.xi_partial);
            l_mart.add(r.l_full);
            lbar_mart.add(r.l_bar);
            if (r.liquidated) ++n_liquidated;
        }
    }

    TableResults out;
    out.log_uninformed = log_unf.estimate();
    out.log_partial = log_part.estimate();
    out.log_full = log_full.estimate();
    out.power_uninformed = pow_unf.estimate();
    out.power_full = power_value_from_xi(xi_full, cfg.p, cfg.x0);
    out.power_partial = power_value_from_xi(xi_part, cfg.p, cfg.x0);
    out.martingale_l = estimate_from_stat(l_mart);
    out.martingale_lbar = estimate_from_stat(lbar_mart);
    out.n_liquidated = n_liquidated;
    out.n_paths = cfg.n_paths;
    return out;
}

FirstPassageStudy first_passage_study(const EvalConfig& cfg) {
    const TimeGrid grid = cfg.grid();
    const ImpactDistribution dist = cfg.distribution();
    const BatchOptions options{cfg.scheme, cfg.bridge_correction};
    RunningStat crossings;
    const int chunk = std::max(1, cfg.chunk_size);
    std::vector<char> crossed(chunk);
    for (int begin = 0; begin < cfg.n_paths; begin += chunk) {
        const int count = std::min(chunk, cfg.n_paths - begin);
        parallel_for(0, count, [&](int i) {
            const SimulatedPath path =
                simulate_path(grid, cfg.market, dist, cfg.rng,
                              static_cast<std::uint64_t>(begin + i), options);
            crossed[i] = path.tau_index.has_value() ? 1 : 0;
        });
        for (int i = 0; i < count; ++i) crossings.add(crossed[i]);
    }
    FirstPassageStudy study;
    study.p_liquidation = estimate_from_stat(crossings);
    study.closed_form = 1.0 - prob_no_liquidation(cfg.market);
    return study;
}

std::vector<RefinementPoint> m_refinement_study(EvalConfig cfg,
                                                const std::vector<int>& steps) {
    std::vector<RefinementPoint> out;
    for (int m : steps) {
        cfg.steps = m;
        const TimeGrid grid = cfg.grid();
        const ImpactDistribution dist = cfg.distribution();
        const BatchOptions options{cfg.scheme, cfg.bridge_correction};
        StatWithExclusions unf, full;
        const int chunk = std::max(1, cfg.chunk_size);
        std::vector<std::pair<double, double>> vals(chunk);
        for (int begin = 0; begin < cfg.n_paths; begin += chunk) {
            const int count = std::min(chunk, cfg.n_paths - begin);
            parallel_for(0, count, [&](int i) {
                const SimulatedPath path =
                    simulate_path(grid, cfg.market, dist, cfg.rng,
                                  static_cast<std::uint64_t>(begin + i), options);
                const auto log_u = UtilitySpec::log_utility();
                const auto u0 = wealth_utility_terminal(path, grid, cfg.market,
                                                        InvestorKind::Uninformed, log_u,
                                                        cfg.x0, nullptr);
                const auto u2 = wealth_utility_terminal(path, grid, cfg.market,
                                                        InvestorKind::FullyInformed, log_u,
                                                        cfg.x0, nullptr);
                vals[i] = {u0 ? *u0 : kNaN, u2 ? *u2 : kNaN};
            });
            for (int i = 0; i < count; ++i) {
                unf.add(vals[i].first);
                full.add(vals[i].second);
            }
        }
        out.push_back({m, unf.estimate(), full.estimate()});
    }
    return out;
}

Trace impact_trace(const std::vector<ImpactDraw>& draws, double t_max, int n_points) {
    Trace tr;
    tr.x_name = "t";
    tr.x.resize(n_points);
    for (int i = 0; i < n_points; ++i) tr.x[i] = t_max * i / (n_points - 1);
    for (const ImpactDraw& d : draws) {
        Series s;
        s.name = "g(theta=" + std::to_string(d.theta) + ",k=" + std::to_string(d.k) + ")";
        s.y.resize(n_points);
        for (int i = 0; i < n_points; ++i) s.y[i] = impact_g(tr.x[i], d);
        tr.series.push_back(std::move(s));
    }
    return tr;
}

Trace impact4_trace(const std::vector<ImpactDraw4>& draws, double t_max, int n_points) {
    Trace tr;
    tr.x_name = "t";
    tr.x.resize(n_points);
    for (int i = 0; i < n_points; ++i) tr.x[i] = t_max * i / (n_points - 1);
    for (const ImpactDraw4& d : draws) {
        Series s;
        s.name = "g4(k1=" + std::to_string(d.k1) + ",k2=" + std::to_string(d.k2) + ")";
        s.y.resize(n_points);
        for (int i = 0; i < n_points; ++i) s.y[i] = impact_g4(tr.x[i], d);
        tr.series.push_back(std::move(s));
    }
    return tr;
}

namespace {

// Rebuilds the impacted segment of a path under a different draw. The
// trigger index only depends on the pre-liquidation prices, so it is
// unchanged.
SimulatedPath override_draw(SimulatedPath path, const ImpactDraw& draw, const TimeGrid& grid) {
    path.draw = draw;
    if (path.tau_index) {
        const int tau = *path.tau_index;
        for (int m = 0; m <= grid.steps; ++m) {
            path.s_market[m] =
                m < tau ? path.s_fund[m] : impact_g((m - tau) * grid.dt, draw) * path.s_fund[m];
            path.run_min[m] =
                m == 0 ? path.s_market[0] : std::min(path.run_min[m - 1], path.s_market[m]);
        }
    }
    return path;
}

}  // namespace

SimulatedPath find_liquidating_path(const EvalConfig& cfg, const ImpactDraw& draw,
                                    int min_index, int max_index) {
    const TimeGrid grid = cfg.grid();
    const ImpactDistribution dist = cfg.distribution();
    const BatchOptions options{cfg.scheme, false};
    for (std::uint64_t i = 0; i < 100000; ++i) {
        SimulatedPath path = simulate_path(grid, cfg.market, dist, cfg.rng, i, options);
        if (path.tau_index && *path.tau_index >= min_index && *path.tau_index <= max_index)
            return override_draw(std::move(path), draw, grid);
    }
    throw NumericalError("find_liquidating_path: no liquidating path in the index window");
}

Trace drift_trace(const EvalConfig& cfg, const ImpactDraw& draw) {
    const TimeGrid grid = cfg.grid();
    const SimulatedPath path = find_liquidating_path(cfg, draw, grid.steps / 8, grid.steps / 2);
    Trace tr;
    tr.x_name = "t";
    for (int m = 0; m <= grid.steps; ++m) tr.x.push_back(grid.time(m));
    Series mu{"mu_market", {}}, sm{"s_market", {}}, sf{"s_fund", {}};
    const double tau_time = path.tau_time(grid);
    for (int m = 0; m <= grid.steps; ++m) {
        mu.y.push_back(drift_market(grid.time(m), tau_time, path.draw, cfg.market));
        sm.y.push_back(path.s_market[m]);
        sf.y.push_back(path.s_fund[m]);
    }
    tr.series = {std::move(mu), std::move(sm), std::move(sf)};
    return tr;
}

Trace filter_trace(const EvalConfig& cfg, const ImpactDraw& draw) {
    const TimeGrid grid = cfg.grid();
    const SimulatedPath path = find_liquidating_path(cfg, draw, grid.steps / 8, grid.steps / 2);
    const ImpactDistribution dist = cfg.distribution();
    const ParticleCloud cloud = ParticleCloud::tensor_grid(dist, cfg.cloud_theta, cfg.cloud_k);
    const FilterOutput fo = run_filter(path, grid, cfg.market, cloud, cfg.innovation);

    Trace tr;
    tr.x_name = "t";
    Series realized{"mu_realized", {}}, filtered{"mu_filtered", {}};
    const double tau_time = path.tau_time(grid);
    for (int m = 0; m <= grid.steps; ++m) {
        tr.x.push_back(grid.time(m));
        realized.y.push_back(drift_market(grid.time(m), tau_time, path.draw, cfg.market));
        filtered.y.push_back(fo.mu_bar[m]);
    }
    tr.series = {std::move(realized), std::move(filtered)};
    return tr;
}

Trace strategy_log_trace(const EvalConfig& cfg, const ImpactDraw& draw) {
    const TimeGrid grid = cfg.grid();
    const SimulatedPath path = find_liquidating_path(cfg, draw, grid.steps / 8, grid.steps / 2);
    const ImpactDistribution dist = cfg.distribution();
    const ParticleCloud cloud = ParticleCloud::tensor_grid(dist, cfg.cloud_theta, cfg.cloud_k);
    const FilterOutput fo = run_filter(path, grid, cfg.market, cloud, cfg.innovation);

    Trace tr;
    tr.x_name = "t";
    Series sm{"s_market", {}}, unf{"pi_uninformed", {}}, part{"pi_partial", {}},
        full{"pi_full", {}};
    const double tau_time = path.tau_time(grid);
    const std::optional<double> tau =
        path.tau_index ? std::optional<double>(tau_time) : std::nullopt;
    for (int m = 0; m <= grid.steps; ++m) {
        const double t = grid.time(m);
        tr.x.push_back(t);
        sm.y.push_back(path.s_market[m]);
        unf.y.push_back(strategy_log(InvestorKind::Uninformed, t, tau, cfg.market));
        part.y.push_back(strategy_log(InvestorKind::PartiallyInformed, t, tau, cfg.market,
                                      std::nullopt, fo.mu_bar[m]));
        full.y.push_back(
            strategy_log(InvestorKind::FullyInformed, t, tau, cfg.market, path.draw));
    }
    tr.series = {std::move(sm), std::move(unf), std::move(part), std::move(full)};
    return tr;
}

Trace strategy_power_trace(const EvalConfig& cfg, int n_demo) {
    const TimeGrid grid = cfg.grid();
    const MarketParams& params = cfg.market;
    const ImpactDistribution dist = cfg.distribution();
    const BatchOptions options{cfg.scheme, false};

    // The one-step H-update breaks down when drift^2 dt gets too large;
    // draws beyond the scheme's stability limit are dropped from the
    // demo batch (the reference parameter box puts a few percent of
    // liquidating paths past it at M = 250).
    const double limit = bsde_drift_limit(params, cfg.p, grid.dt);
    std::vector<SimulatedPath> batch;
    batch.reserve(n_demo);
    const std::uint64_t scan_limit = 4ULL * static_cast<std::uint64_t>(n_demo);
    for (std::uint64_t i = 0; batch.size() < static_cast<std::size_t>(n_demo) && i < scan_limit;
         ++i) {
        SimulatedPath path = simulate_path(grid, params, dist, cfg.rng, i, options);
        const double worst = std::abs(params.mu - path.draw.k / path.draw.theta * M_E);
        if (path.tau_index && worst >= limit) continue;
        batch.push_back(std::move(path));
    }

    const ParticleCloud cloud = ParticleCloud::tensor_grid(dist, cfg.cloud_theta, cfg.cloud_k);
    const FilterContext ctx(cloud, grid, params);
    std::vector<FilterOutput> filters(batch.size());
    parallel_for(0, static_cast<int>(batch.size()), [&](int i) {
        filters[i] = run_filter(batch[i], ctx, cfg.innovation);
    });

    BsdeConfig bcfg;
    bcfg.p = cfg.p;
    const BsdeSolution sol_full = solve_backward(batch, grid, params, bcfg);
    const BsdeSolution sol_part =
        solve_backward_filtered(batch, grid, params, bcfg, filters);
    BsdeConfig pcfg = bcfg;
    pcfg.drift_source = DriftSource::Filtered;

    // First liquidating path in the window whose regression H stays
    // positive where the strategy needs it.
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (!batch[i].tau_index || *batch[i].tau_index < grid.steps / 8 ||
            *batch[i].tau_index > 2 * grid.steps / 5)
            continue;
        try {
            const auto pi_full = strategy_for_path(sol_full, batch[i], static_cast<int>(i),
                                                   grid, params, bcfg);
            const auto pi_part = strategy_for_path(sol_part, batch[i], static_cast<int>(i),
                                                   grid, params, pcfg, &filters[i]);
            Trace tr;
            tr.x_name = "t";
            Series sm{"s_market", {}}, full{"pi_full", {}}, part{"pi_partial", {}},
                flag{"tau_flag", {}};
            for (int m = 0; m < grid.steps; ++m) {
                tr.x.push_back(grid.time(m));
                sm.y.push_back(batch[i].s_market[m]);
                full.y.push_back(pi_full[m]);
                part.y.push_back(pi_part[m]);
                flag.y.push_back(m >= *batch[i].tau_index ? 1.0 : 0.0);
            }
            tr.series = {std::move(sm), std::move(full), std::move(part), std::move(flag)};
            return tr;
        } catch (const NumericalError&) {
            continue;  // regression H crossed zero on this path
        }
    }
    throw NumericalError("strategy_power_trace: no suitable demo path");
}

}  // namespace liqsim
