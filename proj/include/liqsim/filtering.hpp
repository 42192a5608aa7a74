#pragma once

#include <span>
#include <vector>

#include "liqsim/market_model.hpp"
#include "liqsim/path_engine.hpp"

namespace liqsim {

// Fixed atoms discretizing the (Theta, K) prior, with log-weights. The
// state is static, so atoms are drawn once and never resampled; running
// the filter only accrues likelihood exponents on top of these
// log-weights.
struct ParticleCloud {
    std::vector<ImpactDraw> particles;
    std::vector<double> log_weights;  // normalized: logsumexp == 0

    int size() const { return static_cast<int>(particles.size()); }

    // i.i.d. atoms from the prior with equal weights.
    static ParticleCloud sample(const ImpactDistribution& dist, int n, RngSpec spec,
                                std::uint64_t stream_offset = 0);

    // Gauss-Legendre tensor atoms carrying the quadrature weights. Same
    // fixed-atom estimator, better accuracy per atom for the smooth
    // prior integrand.
    static ParticleCloud tensor_grid(const ImpactDistribution& dist, int n_theta,
                                     int n_k);
};

// How the observation Brownian increments dW^Q are obtained: rebuilt
// from observed market prices (measurable for the investor), or from
// the true-draw drift formula used by the reference discretization.
enum class InnovationSource { ObservedPrices, TrueDrift };

struct FilterOutput {
    std::vector<double> mu_bar;             // M+1 filtered drift values
    std::vector<double> final_log_weights;  // posterior at T, normalized
    double log_normalizer = 0.0;            // log of the Kallianpur-Striebel denominator at T
};

// Precomputed per-particle impacted-drift tables for one grid; build
// once and share across paths.
class FilterContext {
public:
    FilterContext(ParticleCloud cloud, const TimeGrid& grid, const MarketParams& params);

    const ParticleCloud& cloud() const { return cloud_; }
    const TimeGrid& grid() const { return grid_; }
    const MarketParams& params() const { return params_; }

    // Impacted drift of particle n at elapsed step s since liquidation.
    double drift_at(int s, int n) const { return table_[s * cloud_.size() + n]; }
    std::span<const double> drift_row(int s) const {
        return {table_.data() + static_cast<std::size_t>(s) * cloud_.size(),
                static_cast<std::size_t>(cloud_.size())};
    }

private:
    ParticleCloud cloud_;
    TimeGrid grid_;
    MarketParams params_;
    std::vector<double> table_;  // (M+1) x n_particles, elapsed-step major
};

// Filtered drift trajectory for one path: mu before the liquidation
// index, the weighted particle average from it onward.
FilterOutput run_filter(const SimulatedPath& path, const FilterContext& ctx,
                        InnovationSource source = InnovationSource::ObservedPrices);

FilterOutput run_filter(const SimulatedPath& path, const TimeGrid& grid,
                        const MarketParams& params, const ParticleCloud& cloud,
                        InnovationSource source = InnovationSource::ObservedPrices);

// Weighted average of the market drift over the cloud's current
// weights, at calendar time t with liquidation time tau.
double filtered_drift_at(const ParticleCloud& cloud, double t, double tau,
                         const MarketParams& params);

// Innovations increments dW~ = dW + (mu^M - mu_bar)/sigma dt along a
// path, from the filter output.
std::vector<double> innovations_increments(const SimulatedPath& path, const TimeGrid& grid,
                                           const MarketParams& params,
                                           const FilterOutput& filter);

}  // namespace liqsim
