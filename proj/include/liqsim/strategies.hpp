#pragma once

#include <optional>
#include <span>
#include <vector>

#include "liqsim/market_model.hpp"
#include "liqsim/path_engine.hpp"

namespace liqsim {

enum class InvestorKind { Uninformed, PartiallyInformed, FullyInformed };

struct UtilitySpec {
    enum class Kind { Log, Power };
    Kind kind = Kind::Log;
    double p = 0.5;  // only meaningful for Power

    static UtilitySpec log_utility() { return {Kind::Log, 0.0}; }
    static UtilitySpec power_utility(double p);

    double value(double x) const;  // U(x), x > 0
};

// Wealth trajectory under a strategy. x stays strictly positive up to
// bankrupt_step; if the Euler update drove wealth non-positive the path
// is flagged, never clamped.
struct WealthPath {
    std::vector<double> x;   // M+1 (valid up to bankrupt_step if set)
    std::vector<double> pi;  // M applied fractions
    std::optional<int> bankrupt_step;

    bool ok() const { return !bankrupt_step.has_value(); }
};

// Log-utility Merton fraction of the given investor at time t.
// FullyInformed reads the realized draw; PartiallyInformed reads the
// filtered drift at t (equal to mu before the trigger).
double strategy_log(InvestorKind kind, double t, std::optional<double> tau,
                    const MarketParams& params,
                    const std::optional<ImpactDraw>& draw = std::nullopt,
                    std::optional<double> filtered_drift = std::nullopt);

// Constant power-utility Merton fraction mu / ((1-p) sigma^2).
double strategy_power_merton(const MarketParams& params, double p);

enum class WealthScheme {
    Euler,     // x_{m+1} = x_m (1 + pi (mu dt + sigma dW))
    ExactExp,  // exact for a fraction held constant over the step
};

// Evolves wealth along the path's stored increments under the given
// per-step fractions and true per-step market drifts.
WealthPath evolve_wealth(const SimulatedPath& path, std::span<const double> fractions,
                         std::span<const double> drifts, const MarketParams& params,
                         const TimeGrid& grid, double x0,
                         WealthScheme scheme = WealthScheme::Euler);

// Realized market drift at the left grid points, m = 0..M-1.
std::vector<double> realized_drift_steps(const SimulatedPath& path, const TimeGrid& grid,
                                         const MarketParams& params);

// x0 / L_T with the likelihood accumulated along the path's own
// increments: the fully informed log investor's optimal terminal wealth.
double log_optimal_wealth_oracle(const SimulatedPath& path, const TimeGrid& grid,
                                 const MarketParams& params, const ImpactDraw& draw,
                                 double x0);

}  // namespace liqsim
