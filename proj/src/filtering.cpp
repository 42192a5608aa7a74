#include "liqsim/filtering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace liqsim {

ParticleCloud ParticleCloud::sample(const ImpactDistribution& dist, int n, RngSpec spec,
                                    std::uint64_t stream_offset) {
    if (n < 1) throw std::invalid_argument("ParticleCloud: need at least one particle");
    ParticleCloud cloud;
    cloud.particles.reserve(n);
    PathRng rng(spec, 0x70617274ULL + stream_offset);  // particle stream, apart from paths
    for (int i = 0; i < n; ++i) cloud.particles.push_back(dist.sample(rng));
    cloud.log_weights.assign(n, -std::log(static_cast<double>(n)));
    return cloud;
}

ParticleCloud ParticleCloud::tensor_grid(const ImpactDistribution& dist, int n_theta,
                                         int n_k) {
    ParticleCloud cloud;
    for (const ImpactNode& node : dist.gauss_nodes(n_theta, n_k)) {
        cloud.particles.emplace_back(node.theta, node.k);
        cloud.log_weights.push_back(std::log(node.weight));
    }
    return cloud;
}

FilterContext::FilterContext(ParticleCloud cloud, const TimeGrid& grid,
                             const MarketParams& params)
    : cloud_(std::move(cloud)), grid_(grid), params_(params) {
    if (cloud_.size() == 0) throw std::invalid_argument("FilterContext: empty cloud");
    if (cloud_.particles.size() != cloud_.log_weights.size())
        throw std::invalid_argument("FilterContext: weights/particles size mismatch");
    const int n = cloud_.size();
    table_.resize(static_cast<std::size_t>(grid_.steps + 1) * n);
    for (int s = 0; s <= grid_.steps; ++s) {
        const double elapsed = s * grid_.dt;
        for (int i = 0; i < n; ++i) {
            table_[static_cast<std::size_t>(s) * n + i] =
                drift_impacted(elapsed, 0.0, cloud_.particles[i], params_);
        }
    }
}

namespace {

double logsumexp(std::span<const double> v) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : v) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
}

}  // namespace

FilterOutput run_filter(const SimulatedPath& path, const FilterContext& ctx,
                        InnovationSource source) {
    const TimeGrid& grid = ctx.grid();
    const MarketParams& params = ctx.params();
    const int M = grid.steps;
    const double dt = grid.dt;
    const double sigma = params.sigma;
    const int n = ctx.cloud().size();

    FilterOutput out;
    out.mu_bar.assign(M + 1, params.mu);
    out.final_log_weights = ctx.cloud().log_weights;
    if (!path.tau_index) {
        // No liquidation: every particle keeps the constant drift mu, so
        // the filter output is mu throughout and weights stay the prior.
        return out;
    }

    const int tau = *path.tau_index;
    const double tau_time = grid.time(tau);
    auto dwq_at = [&](int m) {
        if (source == InnovationSource::ObservedPrices)
            return (path.s_market[m + 1] - path.s_market[m]) / (sigma * path.s_market[m]);
        const double mu_true = drift_market(grid.time(m), tau_time, path.draw, params);
        return path.dw[m] + mu_true / sigma * dt;
    };

    // Increments before tau contribute the same exponent to every
    // particle (the drift is mu regardless of the draw); they cancel in
    // the normalized weights and are folded into the normalizer once.
    double common = 0.0;
    for (int m = 0; m < tau; ++m) {
        const double dwq = dwq_at(m);
        common += (params.mu / sigma) * dwq - params.mu * params.mu / (2.0 * sigma * sigma) * dt;
    }

    std::vector<double> lw = ctx.cloud().log_weights;
    double shift = 0.0;  // running max of lw, for stable exponentials
    for (int m = tau; m <= M; ++m) {
        const std::span<const double> drift = ctx.drift_row(m - tau);
        double denom = 0.0;
        double num = 0.0;
        for (int i = 0; i < n; ++i) {
            const double w = std::exp(lw[i] - shift);
            denom += w;
            num += w * drift[i];
        }
        out.mu_bar[m] = num / denom;
        if (m == M) break;
        const double dwq = dwq_at(m);
        double mx = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            const double mu = drift[i];
            lw[i] += (mu / sigma) * dwq - mu * mu / (2.0 * sigma * sigma) * dt;
            mx = std::max(mx, lw[i]);
        }
        shift = mx;
    }

    const double lse = logsumexp(lw);
    out.log_normalizer = common + lse;
    for (double& w : lw) w -= lse;
    out.final_log_weights = std::move(lw);
    return out;
}

FilterOutput run_filter(const SimulatedPath& path, const TimeGrid& grid,
                        const MarketParams& params, const ParticleCloud& cloud,
                        InnovationSource source) {
    return run_filter(path, FilterContext(cloud, grid, params), source);
}

double filtered_drift_at(const ParticleCloud& cloud, double t, double tau,
                         const MarketParams& params) {
    if (cloud.size() == 0) throw std::invalid_argument("filtered_drift_at: empty cloud");
    const double lse = logsumexp(cloud.log_weights);
    double value = 0.0;
    for (int i = 0; i < cloud.size(); ++i) {
        value += std::exp(cloud.log_weights[i] - lse) *
                 drift_market(t, tau, cloud.particles[i], params);
    }
    return value;
}

std::vector<double> innovations_increments(const SimulatedPath& path, const TimeGrid& grid,
                                           const MarketParams& params,
                                           const FilterOutput& filter) {
    const int M = grid.steps;
    std::vector<double> out(M);
    const double tau_time = path.tau_time(grid);
    for (int m = 0; m < M; ++m) {
        const double mu_true =
            path.tau_index ? drift_market(grid.time(m), tau_time, path.draw, params)
                           : params.mu;
        out[m] = path.dw[m] + (mu_true - filter.mu_bar[m]) / params.sigma * grid.dt;
    }
    return out;
}

}  // namespace liqsim
