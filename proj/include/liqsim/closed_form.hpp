#pragma once

#include "liqsim/market_model.hpp"
#include "liqsim/quadrature.hpp"
#include "liqsim/rng.hpp"

namespace liqsim {

// Barrier problem in Brownian coordinates: B_t = kappa t + W_t with
// kappa = mu/sigma - sigma/2 hits a = ln(alpha)/sigma < 0 exactly when
// the price hits alpha * s0.
struct KappaParams {
    double kappa;
    double a;

    static KappaParams from_market(const MarketParams& params);
};

// Standard normal CDF via the complementary error function.
double normal_cdf(double x);

// P(min over [0,T] of kappa t + W_t > a) for a < 0; reflection formula.
double survival_probability(double kappa, double a, double T);

// P(tau > T) for the liquidation trigger.
double prob_no_liquidation(const MarketParams& params);

// First-passage density of tau at t > 0.
double tau_density(double t, const MarketParams& params);

// Joint density of (B_T, min B) at (x, y); zero off {x > y, y < 0}.
double joint_density_bm_min(double x, double y, double T, double kappa);

// int_t^T (mu^I_v(t,theta,k))^2 / (2 sigma^2) dv by adaptive quadrature.
double impact_drift_sq_integral(double t, double theta, double k,
                                const MarketParams& params,
                                const QuadratureSpec& spec = {});

// Reference values with the barrier removed.
double merton_log_value(const MarketParams& params, double x0);
double merton_power_value(const MarketParams& params, double x0, double p);

// Optimal log expected utility of a fully informed investor at a fixed
// realized (Theta, K).
double v_log_fully(const MarketParams& params, const ImpactDraw& draw, double x0,
                   const QuadratureSpec& spec = {});

// Same quantity averaged over the (Theta, K) law.
double v_log_fully_avg(const MarketParams& params, const ImpactDistribution& dist,
                       double x0, const QuadratureSpec& spec = {}, int n_theta = 16,
                       int n_k = 16);

// Expected log utility of the uninformed (Merton) investor under the
// liquidation dynamics.
double v_log_uninformed(const MarketParams& params, const ImpactDistribution& dist,
                        double x0, const QuadratureSpec& spec = {}, int n_theta = 16,
                        int n_k = 16);

// Expected power utility of the uninformed investor.
double v_power_uninformed(const MarketParams& params, const ImpactDistribution& dist,
                          double x0, double p, const QuadratureSpec& spec = {},
                          int n_theta = 16, int n_k = 16);

struct McValue {
    double value;
    double se;  // standard error of the Monte-Carlo part; 0 if none
};

// Budget of the nested Monte-Carlo estimator inside v_log_partial.
struct PartialValueBudget {
    int t_nodes = 16;          // midpoint grid for h1(t)
    int inner_samples = 256;   // (Theta,K) + noise draws per node
    int steps_per_year = 250;  // inner filter discretization
    int cloud_theta = 16;      // tensor filter cloud
    int cloud_k = 12;
};

// Optimal log expected utility of the partially informed investor.
// h1(t) = E[int_t^T (filtered drift)^2/(2 sigma^2) dv | tau = t] is
// estimated by inner Monte Carlo on a t-grid and interpolated under the
// outer tau-density integral; the SE propagates the node SEs through
// the interpolation weights.
McValue v_log_partial(const MarketParams& params, const ImpactDistribution& dist,
                      double x0, const PartialValueBudget& budget, RngSpec rng,
                      const QuadratureSpec& spec = {});

}  // namespace liqsim
