#include "liqsim/closed_form.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "liqsim/errors.hpp"
#include "liqsim/filtering.hpp"
#include "liqsim/parallel.hpp"

namespace liqsim {

KappaParams KappaParams::from_market(const MarketParams& params) {
    params.validate();
    return {params.mu / params.sigma - 0.5 * params.sigma,
            std::log(params.alpha) / params.sigma};
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double survival_probability(double kappa, double a, double T) {
    if (!(T > 0.0)) throw std::domain_error("survival_probability: T must be > 0");
    if (a >= 0.0) return 0.0;  // started at or below the level
    const double rt = std::sqrt(T);
    return normal_cdf((-a + kappa * T) / rt) -
           std::exp(2.0 * kappa * a) * normal_cdf((a + kappa * T) / rt);
}

double prob_no_liquidation(const MarketParams& params) {
    const KappaParams kp = KappaParams::from_market(params);
    return std::clamp(survival_probability(kp.kappa, kp.a, params.horizon), 0.0, 1.0);
}

double tau_density(double t, const MarketParams& params) {
    if (!(t > 0.0)) throw std::domain_error("tau_density: t must be > 0");
    const KappaParams kp = KappaParams::from_market(params);
    const double d = kp.a - kp.kappa * t;
    const double log_density = std::log(-kp.a) - 0.5 * std::log(2.0 * M_PI * t * t * t) -
                               d * d / (2.0 * t);
    return log_density < -740.0 ? 0.0 : std::exp(log_density);
}

double joint_density_bm_min(double x, double y, double T, double kappa) {
    if (!(x > y) || !(y < 0.0)) return 0.0;
    const double q = 2.0 * y - x;
    return 2.0 * (x - 2.0 * y) / std::sqrt(2.0 * M_PI * T * T * T) *
           std::exp(kappa * x - 0.5 * kappa * kappa * T - q * q / (2.0 * T));
}

double impact_drift_sq_integral(double t, double theta, double k,
                                const MarketParams& params, const QuadratureSpec& spec) {
    if (t > params.horizon)
        throw std::domain_error("impact_drift_sq_integral: t beyond horizon");
    const double span = params.horizon - t;
    if (span == 0.0) return 0.0;
    const ImpactDraw draw(theta, k);
    const double sig2 = params.sigma * params.sigma;
    auto f = [&](double s) {
        const double mu_i = impact_g_prime(s, draw) / impact_g(s, draw) + params.mu;
        return mu_i * mu_i / (2.0 * sig2);
    };
    return integrate_checked(f, 0.0, span, spec);
}

double merton_log_value(const MarketParams& params, double x0) {
    return std::log(x0) +
           params.mu * params.mu * params.horizon / (2.0 * params.sigma * params.sigma);
}

double merton_power_value(const MarketParams& params, double x0, double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("merton_power_value: p in (0,1)");
    const double expo = p * params.mu * params.mu * params.horizon /
                        (2.0 * (1.0 - p) * params.sigma * params.sigma);
    return std::pow(x0, p) / p * std::exp(expo);
}

namespace {

// E[1{no crossing} B_T] plus the survival weight of the log starting
// block: the first term of the log-utility decomposition, common to
// every investor type (they all run the Merton log fraction before the
// trigger).
double log_survival_term(const MarketParams& params, double x0,
                         const QuadratureSpec& spec) {
    const KappaParams kp = KappaParams::from_market(params);
    const double T = params.horizon;
    const double mu = params.mu;
    const double sigma = params.sigma;

    const double base = std::log(x0) + 0.5 * (mu - mu * mu / (sigma * sigma)) * T;
    const double p_surv = survival_probability(kp.kappa, kp.a, T);

    const double x_pad = 10.0 * std::sqrt(T);
    QuadratureSpec inner = spec;
    inner.rel_tol *= 0.25;
    inner.abs_tol *= 0.25;
    auto inner_integral = [&](double y) {
        return integrate_checked(
            [&](double x) { return x * joint_density_bm_min(x, y, T, kp.kappa); }, y,
            y + x_pad, inner);
    };
    const double ebt =
        integrate_checked(inner_integral, kp.a, 0.0, spec);
    return p_surv * base + (mu / sigma) * ebt;
}

// ln of the pre-trigger wealth block evaluated at tau = t, shared by
// h0, h1, h2.
double log_wealth_at_trigger(const MarketParams& params, double x0, double t) {
    const double mu = params.mu;
    const double sig2 = params.sigma * params.sigma;
    return std::log(x0) + mu * std::log(params.alpha) / sig2 + 0.5 * mu * t -
           mu * mu * t / (2.0 * sig2);
}

double tau_integral(const MarketParams& params,
                    const std::function<double(double)>& h,
                    const QuadratureSpec& spec) {
    auto f = [&](double t) { return t <= 0.0 ? 0.0 : tau_density(t, params) * h(t); };
    return integrate_checked(f, 0.0, params.horizon, spec);
}

}  // namespace

double v_log_fully(const MarketParams& params, const ImpactDraw& draw, double x0,
                   const QuadratureSpec& spec) {
    if (!(x0 > 0.0)) throw std::invalid_argument("v_log_fully: x0 must be > 0");
    QuadratureSpec inner = spec;
    inner.rel_tol *= 0.25;
    inner.abs_tol *= 0.25;
    auto h2 = [&](double t) {
        return log_wealth_at_trigger(params, x0, t) +
               impact_drift_sq_integral(t, draw.theta, draw.k, params, inner);
    };
    return log_survival_term(params, x0, spec) + tau_integral(params, h2, spec);
}

double v_log_fully_avg(const MarketParams& params, const ImpactDistribution& dist,
                       double x0, const QuadratureSpec& spec, int n_theta, int n_k) {
    if (!(x0 > 0.0)) throw std::invalid_argument("v_log_fully_avg: x0 must be > 0");
    QuadratureSpec inner = spec;
    inner.rel_tol *= 0.25;
    inner.abs_tol *= 0.25;
    const auto nodes = dist.gauss_nodes(n_theta, n_k);
    std::vector<double> contributions(nodes.size());
    parallel_for(0, static_cast<int>(nodes.size()), [&](int i) {
        const ImpactNode& node = nodes[i];
        auto h2 = [&](double t) {
            return log_wealth_at_trigger(params, x0, t) +
                   impact_drift_sq_integral(t, node.theta, node.k, params, inner);
        };
        contributions[i] = node.weight * tau_integral(params, h2, spec);
    });
    double tau_term = 0.0;
    for (double c : contributions) tau_term += c;
    return log_survival_term(params, x0, spec) + tau_term;
}

double v_log_uninformed(const MarketParams& params, const ImpactDistribution& dist,
                        double x0, const QuadratureSpec& spec, int n_theta, int n_k) {
    if (!(x0 > 0.0)) throw std::invalid_argument("v_log_uninformed: x0 must be > 0");
    const double mu = params.mu;
    const double sig2 = params.sigma * params.sigma;
    const double T = params.horizon;
    const auto nodes = dist.gauss_nodes(n_theta, n_k);
    // int_t^T (2 mu mu^I - mu^2) dv collapses through int g'/g = ln g.
    auto h0_avg = [&](double t) {
        double acc = 0.0;
        for (const ImpactNode& node : nodes) {
            const double log_g = std::log(impact_g(T - t, ImpactDraw(node.theta, node.k)));
            acc += node.weight * (mu * mu * (T - t) + 2.0 * mu * log_g) / (2.0 * sig2);
        }
        return log_wealth_at_trigger(params, x0, t) + acc;
    };
    return log_survival_term(params, x0, spec) + tau_integral(params, h0_avg, spec);
}

double v_power_uninformed(const MarketParams& params, const ImpactDistribution& dist,
                          double x0, double p, const QuadratureSpec& spec, int n_theta,
                          int n_k) {
    if (!(x0 > 0.0)) throw std::invalid_argument("v_power_uninformed: x0 must be > 0");
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("v_power_uninformed: p must lie in (0,1)");
    const double mu = params.mu;
    const double sigma = params.sigma;
    const double sig2 = sigma * sigma;
    const double T = params.horizon;
    const double q = 1.0 - p;
    const KappaParams kp = KappaParams::from_market(params);

    // Survival block: the Merton exponent times the crossing law of the
    // measure-shifted Brownian motion with drift kappa_p.
    const double kappa_p = mu / (q * sigma) - 0.5 * sigma;
    const double survival = std::pow(x0, p) / p *
                            std::exp(p * mu * mu * T / (2.0 * q * sig2)) *
                            survival_probability(kappa_p, kp.a, T);

    // l0 with the pre-trigger wealth block raised to p and the
    // -p mu^2/(2(1-p) sigma^2) variance correction over [t, T]; the
    // lemma's proof carries both. int mu^I collapses through ln g.
    const double log_alpha = std::log(params.alpha);
    const auto nodes = dist.gauss_nodes(n_theta, n_k);
    auto l0_avg = [&](double t) {
        const double head = p * (mu * log_alpha / (q * sig2) + 0.5 * mu * t / q -
                                 0.5 * mu * mu * t / (q * q * sig2));
        double acc = 0.0;
        for (const ImpactNode& node : nodes) {
            const double log_g = std::log(impact_g(T - t, ImpactDraw(node.theta, node.k)));
            const double tail = p * mu * (mu * (T - t) + log_g) / (q * sig2) -
                                p * mu * mu * (T - t) / (2.0 * q * sig2);
            acc += node.weight * std::exp(head + tail);
        }
        return std::pow(x0, p) / p * acc;
    };
    return survival + tau_integral(params, l0_avg, spec);
}

McValue v_log_partial(const MarketParams& params, const ImpactDistribution& dist,
                      double x0, const PartialValueBudget& budget, RngSpec rng,
                      const QuadratureSpec& spec) {
    if (!(x0 > 0.0)) throw std::invalid_argument("v_log_partial: x0 must be > 0");
    if (budget.t_nodes < 2 || budget.inner_samples < 1)
        throw std::invalid_argument("v_log_partial: budget too small");
    const double T = params.horizon;
    const double sig2 = params.sigma * params.sigma;

    // Inner draws live on their own stream family so a caller can share
    // one seed between this estimator and a path batch.
    rng.stream_id ^= 0x696e6e6572ULL;

    // Midpoint t-grid; each node gets an inner Monte-Carlo estimate of
    // E[int_t^T mu_bar^2/(2 sigma^2) dv | tau = t].
    const int J = budget.t_nodes;
    std::vector<double> t_grid(J), est(J), est_se(J);
    for (int j = 0; j < J; ++j) t_grid[j] = (j + 0.5) * T / J;

    parallel_for(0, J, [&](int j) {
        const double t = t_grid[j];
        const double span = T - t;
        const int steps = std::max(2, static_cast<int>(std::lround(span * budget.steps_per_year)));
        const TimeGrid seg(span, steps);
        const ParticleCloud cloud =
            ParticleCloud::tensor_grid(dist, budget.cloud_theta, budget.cloud_k);
        const FilterContext ctx(cloud, seg, params);

        double sum = 0.0, sum_sq = 0.0;
        for (int s = 0; s < budget.inner_samples; ++s) {
            // One post-trigger scenario: fresh draw and noise; the
            // conditional drift needs no prices, only increments.
            PathRng noise(rng, (static_cast<std::uint64_t>(j) << 32) + 2 * s);
            PathRng draw_rng(rng, (static_cast<std::uint64_t>(j) << 32) + 2 * s + 1);
            SimulatedPath seg_path{.dw = std::vector<double>(steps),
                                   .s_fund = {},
                                   .s_market = {},
                                   .run_min = {},
                                   .tau_index = 0,
                                   .draw = dist.sample(draw_rng)};
            const double sqrt_dt = std::sqrt(seg.dt);
            for (int m = 0; m < steps; ++m) seg_path.dw[m] = sqrt_dt * noise.normal();
            const FilterOutput fo = run_filter(seg_path, ctx, InnovationSource::TrueDrift);
            double integral = 0.0;  // trapezoid in the filtered drift squared
            for (int m = 0; m < steps; ++m) {
                integral += 0.5 * (fo.mu_bar[m] * fo.mu_bar[m] + fo.mu_bar[m + 1] * fo.mu_bar[m + 1]) *
                            seg.dt / (2.0 * sig2);
            }
            sum += integral;
            sum_sq += integral * integral;
        }
        const double n = budget.inner_samples;
        est[j] = sum / n;
        const double var = n > 1 ? std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0)) : 0.0;
        est_se[j] = std::sqrt(var / n);
    });

    // Piecewise-linear interpolation of the node estimates, extended
    // linearly past the end nodes, under the tau-density integral.
    auto interp = [&](const std::vector<double>& v, double t) {
        int hi;
        if (t <= t_grid.front()) {
            hi = 1;
        } else if (t >= t_grid.back()) {
            hi = J - 1;
        } else {
            hi = static_cast<int>(std::upper_bound(t_grid.begin(), t_grid.end(), t) -
                                  t_grid.begin());
        }
        const double w = (t - t_grid[hi - 1]) / (t_grid[hi] - t_grid[hi - 1]);
        return (1.0 - w) * v[hi - 1] + w * v[hi];
    };
    auto h1 = [&](double t) { return log_wealth_at_trigger(params, x0, t) + interp(est, t); };
    const double value = log_survival_term(params, x0, spec) + tau_integral(params, h1, spec);

    // SE through the hat-function weights of each node.
    double var = 0.0;
    for (int j = 0; j < J; ++j) {
        std::vector<double> hat(J, 0.0);
        hat[j] = 1.0;
        auto hat_f = [&](double t) { return interp(hat, t); };
        const double wj = tau_integral(params, hat_f, spec);
        var += wj * wj * est_se[j] * est_se[j];
    }
    return {value, std::sqrt(var)};
}

}  // namespace liqsim
