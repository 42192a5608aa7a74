#include "liqsim/strategies.hpp"

#include <cmath>
#include <stdexcept>

namespace liqsim {

UtilitySpec UtilitySpec::power_utility(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("UtilitySpec: power exponent must lie in (0,1)");
    return {Kind::Power, p};
}

double UtilitySpec::value(double x) const {
    if (!(x > 0.0)) throw std::domain_error("UtilitySpec: utility undefined at x <= 0");
    return kind == Kind::Log ? std::log(x) : std::pow(x, p) / p;
}

double strategy_log(InvestorKind kind, double t, std::optional<double> tau,
                    const MarketParams& params, const std::optional<ImpactDraw>& draw,
                    std::optional<double> filtered_drift) {
    const double sig2 = params.sigma * params.sigma;
    switch (kind) {
        case InvestorKind::Uninformed:
            return params.mu / sig2;  // never updates
        case InvestorKind::FullyInformed: {
            if (!draw)
                throw std::invalid_argument("strategy_log: fully informed needs the draw");
            return drift_market(t, tau, *draw, params) / sig2;
        }
        case InvestorKind::PartiallyInformed: {
            if (!tau || t < *tau) return params.mu / sig2;
            if (!filtered_drift)
                throw std::invalid_argument(
                    "strategy_log: partially informed needs the filtered drift after the trigger");
            return *filtered_drift / sig2;
        }
    }
    throw std::logic_error("strategy_log: unhandled investor kind");
}

double strategy_power_merton(const MarketParams& params, double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("strategy_power_merton: p must lie in (0,1)");
    return params.mu / ((1.0 - p) * params.sigma * params.sigma);
}

WealthPath evolve_wealth(const SimulatedPath& path, std::span<const double> fractions,
                         std::span<const double> drifts, const MarketParams& params,
                         const TimeGrid& grid, double x0, WealthScheme scheme) {
    if (!(x0 > 0.0)) throw std::invalid_argument("evolve_wealth: x0 must be > 0");
    const int M = grid.steps;
    if (static_cast<int>(fractions.size()) != M || static_cast<int>(drifts.size()) != M ||
        static_cast<int>(path.dw.size()) != M)
        throw std::invalid_argument("evolve_wealth: step arrays must have M entries");

    WealthPath out;
    out.x.assign(M + 1, 0.0);
    out.pi.assign(fractions.begin(), fractions.end());
    out.x[0] = x0;
    const double dt = grid.dt;
    const double sigma = params.sigma;
    for (int m = 0; m < M; ++m) {
        const double pi = fractions[m];
        double next;
        if (scheme == WealthScheme::Euler) {
            next = out.x[m] * (1.0 + pi * (drifts[m] * dt + sigma * path.dw[m]));
        } else {
            next = out.x[m] * std::exp((pi * drifts[m] - 0.5 * pi * pi * sigma * sigma) * dt +
                                       pi * sigma * path.dw[m]);
        }
        if (!(next > 0.0)) {
            out.bankrupt_step = m + 1;
            return out;
        }
        out.x[m + 1] = next;
    }
    return out;
}

std::vector<double> realized_drift_steps(const SimulatedPath& path, const TimeGrid& grid,
                                         const MarketParams& params) {
    std::vector<double> drifts(grid.steps);
    if (!path.tau_index) {
        std::fill(drifts.begin(), drifts.end(), params.mu);
        return drifts;
    }
    const double tau_time = path.tau_time(grid);
    for (int m = 0; m < grid.steps; ++m)
        drifts[m] = drift_market(grid.time(m), tau_time, path.draw, params);
    return drifts;
}

double log_optimal_wealth_oracle(const SimulatedPath& path, const TimeGrid& grid,
                                 const MarketParams& params, const ImpactDraw& draw,
                                 double x0) {
    const double sigma = params.sigma;
    const double dt = grid.dt;
    const double tau_time = path.tau_time(grid);
    double log_l = 0.0;
    for (int m = 0; m < grid.steps; ++m) {
        const double mu = path.tau_index
                              ? drift_market(grid.time(m), tau_time, draw, params)
                              : params.mu;
        log_l += -(mu / sigma) * path.dw[m] - mu * mu / (2.0 * sigma * sigma) * dt;
    }
    return x0 / std::exp(log_l);
}

}  // namespace liqsim
