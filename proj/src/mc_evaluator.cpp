#include "liqsim/mc_evaluator.hpp"

#include <cmath>
#include <stdexcept>

namespace liqsim {

void RunningStat::add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / n_;
    m2_ += d * (x - mean_);
}

void RunningStat::merge(const RunningStat& other) {
    if (other.n_ == 0) return;
    if (n_ == 0) {
        *this = other;
        return;
    }
    const double d = other.mean_ - mean_;
    const long long n = n_ + other.n_;
    m2_ += other.m2_ + d * d * (static_cast<double>(n_) * other.n_ / n);
    mean_ += d * other.n_ / n;
    n_ = n;
}

double RunningStat::se() const {
    if (n_ < 2) return 0.0;
    return std::sqrt(m2_ / (static_cast<double>(n_ - 1) * n_));
}

Estimate estimate_from_stat(const RunningStat& stat, long long n_excluded) {
    if (stat.count() < 2)
        throw std::invalid_argument("estimate_from_stat: need at least two samples");
    Estimate e;
    e.mean = stat.mean();
    e.se = stat.se();
    e.rse = e.mean != 0.0 ? e.se / std::abs(e.mean) : 0.0;
    e.ci_lo = e.mean - 1.96 * e.se;
    e.ci_hi = e.mean + 1.96 * e.se;
    e.n_effective = stat.count();
    e.n_excluded = n_excluded;
    return e;
}

Estimate estimate_mean(std::span<const double> samples) {
    RunningStat stat;
    for (double x : samples) stat.add(x);
    return estimate_from_stat(stat);
}

double log_likelihood_exponent(std::span<const double> increments,
                               std::span<const double> drifts, double sigma, double dt) {
    if (increments.size() != drifts.size())
        throw std::invalid_argument("log_likelihood_exponent: size mismatch");
    double acc = 0.0;
    for (std::size_t m = 0; m < increments.size(); ++m) {
        acc += -(drifts[m] / sigma) * increments[m] -
               drifts[m] * drifts[m] / (2.0 * sigma * sigma) * dt;
    }
    return acc;
}

double accumulate_likelihood(const SimulatedPath& path, std::span<const double> drifts,
                             const MarketParams& params, const TimeGrid& grid) {
    return std::exp(log_likelihood_exponent(path.dw, drifts, params.sigma, grid.dt));
}

std::vector<double> strategy_fractions(const SimulatedPath& path, const TimeGrid& grid,
                                       const MarketParams& params, InvestorKind kind,
                                       const UtilitySpec& utility,
                                       const FilterOutput* filter) {
    const int M = grid.steps;
    const double sig2 = params.sigma * params.sigma;
    std::vector<double> pi(M);

    if (utility.kind == UtilitySpec::Kind::Power) {
        // Wealth-route power evaluation is the uninformed investor's:
        // the informed power strategies live in the BSDE module.
        if (kind != InvestorKind::Uninformed)
            throw std::invalid_argument(
                "strategy_fractions: informed power strategies require the BSDE solution");
        std::fill(pi.begin(), pi.end(), strategy_power_merton(params, utility.p));
        return pi;
    }

    const double merton = params.mu / sig2;
    switch (kind) {
        case InvestorKind::Uninformed:
            std::fill(pi.begin(), pi.end(), merton);
            break;
        case InvestorKind::FullyInformed: {
            const auto drifts = realized_drift_steps(path, grid, params);
            for (int m = 0; m < M; ++m) pi[m] = drifts[m] / sig2;
            break;
        }
        case InvestorKind::PartiallyInformed: {
            if (!filter)
                throw std::invalid_argument(
                    "strategy_fractions: partially informed needs the filter output");
            for (int m = 0; m < M; ++m) pi[m] = filter->mu_bar[m] / sig2;
            break;
        }
    }
    return pi;
}

std::optional<double> wealth_utility_terminal(const SimulatedPath& path,
                                              const TimeGrid& grid,
                                              const MarketParams& params,
                                              InvestorKind kind, const UtilitySpec& utility,
                                              double x0, const FilterOutput* filter) {
    const auto pi = strategy_fractions(path, grid, params, kind, utility, filter);
    const auto drifts = realized_drift_steps(path, grid, params);
    const WealthPath w = evolve_wealth(path, pi, drifts, params, grid, x0);
    if (!w.ok()) return std::nullopt;
    return utility.value(w.x.back());
}

double likelihood_terminal(const SimulatedPath& path, const TimeGrid& grid,
                           const MarketParams& params, InvestorKind kind,
                           const FilterOutput* filter) {
    if (kind == InvestorKind::FullyInformed) {
        const auto drifts = realized_drift_steps(path, grid, params);
        return accumulate_likelihood(path, drifts, params, grid);
    }
    if (kind != InvestorKind::PartiallyInformed)
        throw std::invalid_argument("likelihood_terminal: informed investors only");
    if (!filter)
        throw std::invalid_argument("likelihood_terminal: partially informed needs the filter");
    const auto dw_tilde = innovations_increments(path, grid, params, *filter);
    return std::exp(log_likelihood_exponent(
        dw_tilde, std::span<const double>(filter->mu_bar.data(), grid.steps), params.sigma,
        grid.dt));
}

Estimate power_value_from_xi(const RunningStat& xi_stat, double p, double x0,
                             long long n_excluded) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("power_value_from_xi: p must lie in (0,1)");
    const Estimate xi = estimate_from_stat(xi_stat, n_excluded);
    const double scale = std::pow(x0, p) / p;
    auto map = [&](double v) { return scale * std::pow(std::max(v, 0.0), 1.0 - p); };
    Estimate e;
    e.mean = map(xi.mean);
    e.ci_lo = map(xi.ci_lo);
    e.ci_hi = map(xi.ci_hi);
    e.se = (e.ci_hi - e.ci_lo) / (2.0 * 1.96);
    e.rse = e.mean != 0.0 ? e.se / std::abs(e.mean) : 0.0;
    e.n_effective = xi.n_effective;
    e.n_excluded = n_excluded;
    return e;
}

Estimate mc_power_informed(std::span<const SimulatedPath> batch, const TimeGrid& grid,
                           const MarketParams& params, double p, double x0,
                           InvestorKind kind, const FilterContext* filter) {
    if (kind == InvestorKind::Uninformed)
        throw std::invalid_argument("mc_power_informed: use the wealth route for uninformed");
    if (kind == InvestorKind::PartiallyInformed && !filter)
        throw std::invalid_argument("mc_power_informed: partially informed needs a filter context");
    const double expo = p / (p - 1.0);
    RunningStat xi;
    for (const SimulatedPath& path : batch) {
        double l;
        if (kind == InvestorKind::FullyInformed) {
            l = likelihood_terminal(path, grid, params, kind, nullptr);
        } else {
            const FilterOutput fo = run_filter(path, *filter);
            l = likelihood_terminal(path, grid, params, kind, &fo);
        }
        xi.add(std::pow(l, expo));
    }
    return power_value_from_xi(xi, p, x0);
}

Estimate mc_utility_by_wealth(std::span<const SimulatedPath> batch, const TimeGrid& grid,
                              const MarketParams& params, InvestorKind kind,
                              const UtilitySpec& utility, double x0,
                              const FilterContext* filter) {
    if (kind == InvestorKind::PartiallyInformed && !filter)
        throw std::invalid_argument("mc_utility_by_wealth: partially informed needs a filter context");
    RunningStat stat;
    long long excluded = 0;
    for (const SimulatedPath& path : batch) {
        std::optional<FilterOutput> fo;
        if (kind == InvestorKind::PartiallyInformed) fo = run_filter(path, *filter);
        const auto u = wealth_utility_terminal(path, grid, params, kind, utility, x0,
                                               fo ? &*fo : nullptr);
        if (u) {
            stat.add(*u);
        } else {
            ++excluded;
        }
    }
    return estimate_from_stat(stat, excluded);
}

}  // namespace liqsim
