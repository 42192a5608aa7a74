#pragma once

#include <functional>
#include <optional>
#include <vector>

namespace liqsim {

// Constants of the fundamental dynamics and the liquidation trigger.
// dS = S (mu dt + sigma dW), liquidation when the market price first
// reaches alpha * s0.
struct MarketParams {
    double mu = 0.07;      // drift, per year
    double sigma = 0.2;    // volatility, per sqrt(year)
    double s0 = 80.0;      // initial price
    double alpha = 0.9;    // barrier fraction, in (0,1)
    double horizon = 1.0;  // T, years

    void validate() const;  // throws std::invalid_argument
    double barrier() const { return alpha * s0; }
};

// One realized (Theta, K) pair. Theta sets the speed of the temporary
// impact, K its magnitude. K < 1 is enforced strictly: at K = 1 the
// impacted drift g'/g is singular at t = Theta.
struct ImpactDraw {
    double theta;
    double k;

    ImpactDraw(double theta_, double k_);
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double width() const { return hi - lo; }
    bool degenerate() const { return hi <= lo; }
    double midpoint() const { return 0.5 * (lo + hi); }
};

class PathRng;

// Weighted quadrature node over the (theta, k) box.
struct ImpactNode {
    double theta;
    double k;
    double weight;  // integrates phi against the box; weights sum to 1
};

// Joint law of (Theta, K) on theta_range x k_range. Default: uniform
// product, matching the numerical sections. A custom joint density can
// be supplied (with an upper bound for rejection sampling) so that
// correlated laws fit behind the same interface.
class ImpactDistribution {
public:
    ImpactDistribution(Interval theta_range, Interval k_range);
    ImpactDistribution(Interval theta_range, Interval k_range,
                       std::function<double(double, double)> density,
                       double density_bound);

    const Interval& theta_range() const { return theta_range_; }
    const Interval& k_range() const { return k_range_; }
    bool is_uniform() const { return !custom_density_; }

    // Joint density phi(theta, k); zero off the support. Requires a
    // non-degenerate support in both coordinates.
    double density(double theta, double k) const;

    ImpactDraw sample(PathRng& rng) const;

    // Gauss-Legendre tensor nodes weighted by phi, normalized to sum to
    // one. A degenerate coordinate collapses to a single node.
    std::vector<ImpactNode> gauss_nodes(int n_theta, int n_k) const;

private:
    Interval theta_range_;
    Interval k_range_;
    std::function<double(double, double)> custom_density_;
    double density_bound_ = 0.0;
};

// Two-scale impact with a permanent component K1 and a temporary
// component K2; long-time level is 1 - K1.
struct ImpactDraw4 {
    double theta1;
    double theta2;
    double k1;
    double k2;

    ImpactDraw4(double theta1_, double theta2_, double k1_, double k2_);
};

// g(t) = 1 - (K t / Theta) exp(1 - t/Theta). Equals 1 at t = 0, dips to
// its minimum 1 - K at t = Theta, and relaxes back toward 1.
double impact_g(double t, const ImpactDraw& draw);

// Analytic derivative of impact_g: (K/Theta) exp(1 - t/Theta) (t/Theta - 1).
double impact_g_prime(double t, const ImpactDraw& draw);

// Four-parameter variant, continuous at t = Theta1.
double impact_g4(double t, const ImpactDraw4& draw);

// Post-liquidation drift of the market price: g'(t-u)/g(t-u) + mu,
// where u is the liquidation time.
double drift_impacted(double t, double u, const ImpactDraw& draw,
                      const MarketParams& params);

// Regime-switching market drift: mu before the liquidation time, the
// impacted drift at and after it. tau = nullopt means no liquidation.
double drift_market(double t, std::optional<double> tau, const ImpactDraw& draw,
                    const MarketParams& params);

}  // namespace liqsim
