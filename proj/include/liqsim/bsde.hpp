#pragma once

#include <functional>
#include <span>
#include <vector>

#include "liqsim/filtering.hpp"
#include "liqsim/path_engine.hpp"

namespace liqsim {

enum class DriftSource { FullyInformed, Filtered };

// Regression state: paper basis on (x, y) = (S^M - alpha S0, min S^M -
// alpha S0); the extended mode appends (t - tau)+ and its square, which
// the pair (S^M, min) does not encode post-liquidation.
enum class BasisMode { PaperFaithful, ExtendedElapsed };

struct BsdeConfig {
    double p = 0.5;
    BasisMode basis = BasisMode::PaperFaithful;
    // ridge < 0: auto, 1e-8 * trace(Gram)/n_basis. Early cross-sections
    // are rank-deficient by construction (no path has liquidated, so the
    // y-features degenerate), which the auto ridge absorbs.
    double ridge = -1.0;
    DriftSource drift_source = DriftSource::FullyInformed;
};

// (H, Z^H) on the grid, time-major.
struct BsdeSolution {
    int n_paths = 0;
    int steps = 0;
    std::vector<double> h;  // (steps+1) * n_paths
    std::vector<double> z;  // steps * n_paths

    double h_at(int m, int i) const { return h[static_cast<std::size_t>(m) * n_paths + i]; }
    double z_at(int m, int i) const { return z[static_cast<std::size_t>(m) * n_paths + i]; }
};

// Least-squares coefficients of targets on features (row-major n x
// n_features) with optional ridge. Throws NumericalError when the
// design is rank-deficient and ridge == 0.
std::vector<double> regress(std::span<const double> targets, std::span<const double> features,
                            int n_features, double ridge);

// Per-step view handed to the diagnostics callback during the backward
// recursion.
struct BsdeStepDiagnostics {
    int m = 0;
    int n_features = 0;
    std::span<const double> features;  // n_paths x n_features, row-major
    std::span<const double> target_h;
    std::span<const double> target_z;
    std::span<const double> coef_h;
    std::span<const double> coef_z;
    double ridge = 0.0;
    double r2_h = 0.0;
};
using BsdeStepCallback = std::function<void(const BsdeStepDiagnostics&)>;

// Backward regression recursion for the pre-liquidation hedging BSDE:
//   Z_m = E[H_{m+1} dW_m | state] / dt,
//   H_m = (E[H_{m+1} | state] + p mu/((1-p) sigma) Z_m dt)
//         / (1 - p mu^2/(2 (1-p)^2 sigma^2) dt),
// with both conditional expectations fitted cross-sectionally on the
// regression basis. The fully informed variant reads each path's own
// realized drift and Brownian increments.
BsdeSolution solve_backward(std::span<const SimulatedPath> batch, const TimeGrid& grid,
                            const MarketParams& params, const BsdeConfig& cfg,
                            const BsdeStepCallback& callback = nullptr);

// Filtered variant: drift is the filter's mu_bar and the Z-regression
// uses the innovations increments.
BsdeSolution solve_backward_filtered(std::span<const SimulatedPath> batch,
                                     const TimeGrid& grid, const MarketParams& params,
                                     const BsdeConfig& cfg,
                                     std::span<const FilterOutput> filters,
                                     const BsdeStepCallback& callback = nullptr);

// Portfolio fractions per (step, path), time-major: Merton plus the
// hedging demand Z/(sigma H) before the trigger, the impacted Merton
// fraction afterward (mu^I fully informed, mu_bar filtered).
std::vector<double> strategy_from_solution(const BsdeSolution& sol,
                                           std::span<const SimulatedPath> batch,
                                           const TimeGrid& grid, const MarketParams& params,
                                           const BsdeConfig& cfg,
                                           std::span<const FilterOutput> filters = {});

// Same rule for a single path of the solved batch.
std::vector<double> strategy_for_path(const BsdeSolution& sol, const SimulatedPath& path,
                                      int path_index, const TimeGrid& grid,
                                      const MarketParams& params, const BsdeConfig& cfg,
                                      const FilterOutput* filter = nullptr);

// Largest one-step drift magnitude the H-update denominator tolerates:
// |mu| < sigma (1-p) sqrt(2 / (p dt)).
double bsde_drift_limit(const MarketParams& params, double p, double dt);

}  // namespace liqsim
