#pragma once

#include <functional>
#include <string>
#include <vector>

#include "liqsim/bsde.hpp"
#include "liqsim/closed_form.hpp"
#include "liqsim/mc_evaluator.hpp"

namespace liqsim {

// One self-contained evaluation setup; defaults reproduce the reference
// configuration (mu=0.07, sigma=0.2, S0=80, alpha=0.9, T=1, M=250,
// N=1e5, (Theta,K) ~ U([0.05,0.15]x[0.02,0.08]), x0=80, p=1/2).
struct EvalConfig {
    MarketParams market{};
    Interval theta_range{0.05, 0.15};
    Interval k_range{0.02, 0.08};
    int steps = 250;
    int n_paths = 100000;
    double x0 = 80.0;
    double p = 0.5;
    RngSpec rng{};
    Scheme scheme = Scheme::Euler;
    bool bridge_correction = false;
    InnovationSource innovation = InnovationSource::ObservedPrices;
    int cloud_theta = 16;
    int cloud_k = 12;
    int chunk_size = 8192;

    ImpactDistribution distribution() const { return {theta_range, k_range}; }
    TimeGrid grid() const { return {market.horizon, steps}; }
};

// The six utility estimates plus the likelihood martingale diagnostics.
struct TableResults {
    Estimate log_uninformed, log_partial, log_full;
    Estimate power_uninformed, power_partial, power_full;
    Estimate martingale_l, martingale_lbar;  // sample means of L_T, Lbar_T
    long long n_liquidated = 0;
    long long n_paths = 0;
};

// Chunked streaming evaluation over n_paths with common random numbers:
// every investor type is evaluated on the same simulated path, and the
// per-path filter run is shared between the log strategy and the
// L-bar functional.
TableResults run_tables(const EvalConfig& cfg);

// Empirical first-passage probability with/without the bridge
// correction, exact-log scheme.
struct FirstPassageStudy {
    Estimate p_liquidation;  // mean of the crossing indicator
    double closed_form;      // 1 - P(tau > T)
};
FirstPassageStudy first_passage_study(const EvalConfig& cfg);

// Mean utilities at several step counts, for the discretization-bias
// allowance of the closed-form comparisons.
struct RefinementPoint {
    int steps = 0;
    Estimate log_uninformed;
    Estimate log_full;
};
std::vector<RefinementPoint> m_refinement_study(EvalConfig cfg, const std::vector<int>& steps);

// ---- figure traces ----

struct Series {
    std::string name;
    std::vector<double> y;
};
struct Trace {
    std::string x_name;
    std::vector<double> x;
    std::vector<Series> series;
};

// Impact curves g(t; theta, k) for a set of draws.
Trace impact_trace(const std::vector<ImpactDraw>& draws, double t_max, int n_points);
Trace impact4_trace(const std::vector<ImpactDraw4>& draws, double t_max, int n_points);

// Realized market drift and prices along one path with a forced draw.
Trace drift_trace(const EvalConfig& cfg, const ImpactDraw& draw);

// Filtered vs realized drift along one liquidating path (the forced
// draw is the scenario the filter must learn).
Trace filter_trace(const EvalConfig& cfg, const ImpactDraw& draw);

// Log-utility fractions of the three investors along one liquidating path.
Trace strategy_log_trace(const EvalConfig& cfg, const ImpactDraw& draw);

// Power-utility fractions (BSDE hedging demand before the trigger) for
// fully and partially informed investors along one liquidating path
// out of a demo batch of n_demo paths.
Trace strategy_power_trace(const EvalConfig& cfg, int n_demo);

// First path in the batch that liquidates in the index window, with its
// draw overridden to `draw` (prices and trigger are draw-independent
// before the crossing only, so the path is re-impacted consistently).
SimulatedPath find_liquidating_path(const EvalConfig& cfg, const ImpactDraw& draw,
                                    int min_index, int max_index);

}  // namespace liqsim
