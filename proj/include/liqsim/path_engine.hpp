#pragma once

#include <optional>
#include <span>
#include <vector>

#include "liqsim/market_model.hpp"
#include "liqsim/rng.hpp"

namespace liqsim {

// Uniform grid 0 = t_0 < ... < t_M = horizon.
struct TimeGrid {
    double horizon;
    int steps;
    double dt;

    TimeGrid(double horizon_, int steps_);
    double time(int m) const { return (m == steps) ? horizon : m * dt; }
};

enum class Scheme { Euler, ExactLog };

// One discretized trajectory. The market price equals the fundamental
// price up to the liquidation index and g(t - t_tau) times it afterward,
// so the regime split is exact by construction.
struct SimulatedPath {
    std::vector<double> dw;        // M Brownian increments
    std::vector<double> s_fund;    // M+1 fundamental prices
    std::vector<double> s_market;  // M+1 market prices
    std::vector<double> run_min;   // M+1 running minimum of s_market
    std::optional<int> tau_index;  // first grid crossing, if any
    ImpactDraw draw;               // (Theta, K) carried by this path

    double tau_time(const TimeGrid& grid) const {
        return tau_index ? grid.time(*tau_index) : grid.horizon;
    }
};

struct BatchOptions {
    Scheme scheme = Scheme::Euler;
    // Applies the Brownian-bridge crossing probability between grid
    // points; the crossing is booked at the right endpoint. Off by
    // default: grid monitoring matches the reference numbers.
    bool bridge_correction = false;
};

// Smallest index with price <= barrier (inclusive), or nullopt.
std::optional<int> detect_liquidation(std::span<const double> prices, double barrier);

// Probability that the log-price bridge between two supra-barrier
// points dipped below the barrier; compares it against the uniform draw.
bool bridge_crossing_correction(double s_prev, double s_next, double barrier,
                                double sigma, double dt, double uniform_draw);

// Simulates path index `path_index` of the batch identified by (spec,
// options). Pure function of its arguments.
SimulatedPath simulate_path(const TimeGrid& grid, const MarketParams& params,
                            const ImpactDistribution& dist, RngSpec spec,
                            std::uint64_t path_index, const BatchOptions& options = {});

// n independent paths; path i uses the stream (seed, stream_id, i).
std::vector<SimulatedPath> simulate_batch(const TimeGrid& grid, const MarketParams& params,
                                          const ImpactDistribution& dist, int n_paths,
                                          RngSpec spec, const BatchOptions& options = {});

}  // namespace liqsim
