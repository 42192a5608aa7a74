#pragma once

#include <span>
#include <vector>

#include "liqsim/filtering.hpp"
#include "liqsim/path_engine.hpp"
#include "liqsim/strategies.hpp"

namespace liqsim {

// Sample-mean record with the usual error machinery.
struct Estimate {
    double mean = 0.0;
    double se = 0.0;
    double rse = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    long long n_effective = 0;
    long long n_excluded = 0;
};

// Streaming mean/variance accumulator (Welford) with exact merging, so
// chunked evaluation reproduces the single-pass result.
class RunningStat {
public:
    void add(double x);
    void merge(const RunningStat& other);
    long long count() const { return n_; }
    double mean() const { return mean_; }
    double sum_sq_dev() const { return m2_; }
    double se() const;

private:
    long long n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

Estimate estimate_mean(std::span<const double> samples);
Estimate estimate_from_stat(const RunningStat& stat, long long n_excluded = 0);

// Sum of the log-likelihood exponent -(mu/sigma) dW - mu^2/(2 sigma^2) dt.
double log_likelihood_exponent(std::span<const double> increments,
                               std::span<const double> drifts, double sigma, double dt);

// L_T along the path's own increments (or L-bar when handed filtered
// drifts and innovations increments instead).
double accumulate_likelihood(const SimulatedPath& path, std::span<const double> drifts,
                             const MarketParams& params, const TimeGrid& grid);

// Power-utility value of an informed investor via the likelihood
// functional: xi = E[(L_T)^{p/(p-1)}], V = (x0^p / p) xi^{1-p}, with the
// confidence interval mapped through the monotone transform. se/rse
// are the half-width equivalents of the mapped interval.
Estimate mc_power_informed(std::span<const SimulatedPath> batch, const TimeGrid& grid,
                           const MarketParams& params, double p, double x0,
                           InvestorKind kind, const FilterContext* filter = nullptr);

// Expected utility by evolving wealth under the investor's strategy;
// bankrupt paths are excluded and counted.
Estimate mc_utility_by_wealth(std::span<const SimulatedPath> batch, const TimeGrid& grid,
                              const MarketParams& params, InvestorKind kind,
                              const UtilitySpec& utility, double x0,
                              const FilterContext* filter = nullptr);

// ---- per-path kernels (shared by the batch wrappers and the chunked
// table runner, which reuses one filter run per path) ----

// Per-step fractions of the investor's strategy along one path.
std::vector<double> strategy_fractions(const SimulatedPath& path, const TimeGrid& grid,
                                       const MarketParams& params, InvestorKind kind,
                                       const UtilitySpec& utility,
                                       const FilterOutput* filter);

// U(X_T) under the strategy; nullopt when the Euler wealth went
// non-positive.
std::optional<double> wealth_utility_terminal(const SimulatedPath& path,
                                              const TimeGrid& grid,
                                              const MarketParams& params,
                                              InvestorKind kind, const UtilitySpec& utility,
                                              double x0, const FilterOutput* filter);

// L_T (fully informed) or L-bar_T (partially informed, needs the
// filter output).
double likelihood_terminal(const SimulatedPath& path, const TimeGrid& grid,
                           const MarketParams& params, InvestorKind kind,
                           const FilterOutput* filter);

// V = (x0^p/p) xi^{1-p} and the mapped interval, from the xi statistics.
Estimate power_value_from_xi(const RunningStat& xi_stat, double p, double x0,
                             long long n_excluded = 0);

}  // namespace liqsim
