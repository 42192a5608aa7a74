#include "liqsim/path_engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "liqsim/parallel.hpp"

namespace liqsim {

TimeGrid::TimeGrid(double horizon_, int steps_) : horizon(horizon_), steps(steps_) {
    if (!(horizon > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be > 0");
    if (steps < 1) throw std::invalid_argument("TimeGrid: need at least one step");
    dt = horizon / steps;
}

std::optional<int> detect_liquidation(std::span<const double> prices, double barrier) {
    for (std::size_t m = 0; m < prices.size(); ++m) {
        if (prices[m] <= barrier) return static_cast<int>(m);
    }
    return std::nullopt;
}

bool bridge_crossing_correction(double s_prev, double s_next, double barrier,
                                double sigma, double dt, double uniform_draw) {
    if (s_next <= barrier || s_prev <= barrier) return true;
    const double a = std::log(s_prev / barrier);
    const double b = std::log(s_next / barrier);
    const double p = std::exp(-2.0 * a * b / (sigma * sigma * dt));
    return uniform_draw < p;
}

SimulatedPath simulate_path(const TimeGrid& grid, const MarketParams& params,
                            const ImpactDistribution& dist, RngSpec spec,
                            std::uint64_t path_index, const BatchOptions& options) {
    params.validate();
    const int M = grid.steps;
    const double dt = grid.dt;
    const double sqrt_dt = std::sqrt(dt);
    const double barrier = params.barrier();

    PathRng rng(spec, path_index);
    SimulatedPath path{.dw = std::vector<double>(M),
                       .s_fund = std::vector<double>(M + 1),
                       .s_market = std::vector<double>(M + 1),
                       .run_min = std::vector<double>(M + 1),
                       .tau_index = std::nullopt,
                       .draw = dist.sample(rng)};

    // Fundamental path first; the trigger scans it because the market
    // price coincides with it until the crossing.
    path.s_fund[0] = params.s0;
    const double log_step_drift = (params.mu - 0.5 * params.sigma * params.sigma) * dt;
    for (int m = 0; m < M; ++m) {
        const double dwm = sqrt_dt * rng.normal();
        path.dw[m] = dwm;
        const double s = path.s_fund[m];
        double next;
        if (options.scheme == Scheme::Euler) {
            next = s * (1.0 + params.mu * dt + params.sigma * dwm);
            if (!(next > 0.0))
                throw std::runtime_error("simulate_path: Euler fundamental price hit zero");
        } else {
            next = s * std::exp(log_step_drift + params.sigma * dwm);
        }
        path.s_fund[m + 1] = next;
    }

    for (int m = 0; m <= M && !path.tau_index; ++m) {
        if (path.s_fund[m] <= barrier) {
            path.tau_index = m;
        } else if (options.bridge_correction && m < M && path.s_fund[m + 1] > barrier) {
            if (bridge_crossing_correction(path.s_fund[m], path.s_fund[m + 1], barrier,
                                           params.sigma, dt, rng.uniform())) {
                path.tau_index = m + 1;
            }
        }
    }

    const int tau = path.tau_index.value_or(M + 1);
    for (int m = 0; m <= M; ++m) {
        path.s_market[m] = (m < tau)
                               ? path.s_fund[m]
                               : impact_g((m - tau) * dt, path.draw) * path.s_fund[m];
        path.run_min[m] = (m == 0) ? path.s_market[0]
                                   : std::min(path.run_min[m - 1], path.s_market[m]);
    }
    return path;
}

std::vector<SimulatedPath> simulate_batch(const TimeGrid& grid, const MarketParams& params,
                                          const ImpactDistribution& dist, int n_paths,
                                          RngSpec spec, const BatchOptions& options) {
    if (n_paths < 1) throw std::invalid_argument("simulate_batch: need n_paths >= 1");
    std::vector<SimulatedPath> batch;
    batch.reserve(n_paths);
    for (int i = 0; i < n_paths; ++i) batch.emplace_back(SimulatedPath{
        .dw = {}, .s_fund = {}, .s_market = {}, .run_min = {},
        .tau_index = std::nullopt, .draw = ImpactDraw(1.0, 0.0)});
    parallel_for(0, n_paths, [&](int i) {
        batch[i] = simulate_path(grid, params, dist, spec, static_cast<std::uint64_t>(i),
                                 options);
    });
    return batch;
}

}  // namespace liqsim
