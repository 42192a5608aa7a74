#include "liqsim/market_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "liqsim/rng.hpp"

namespace liqsim {

void MarketParams::validate() const {
    if (!(sigma > 0.0)) throw std::invalid_argument("MarketParams: sigma must be > 0");
    if (!(s0 > 0.0)) throw std::invalid_argument("MarketParams: s0 must be > 0");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("MarketParams: alpha must lie in (0,1)");
    if (!(horizon > 0.0)) throw std::invalid_argument("MarketParams: horizon must be > 0");
    if (!std::isfinite(mu)) throw std::invalid_argument("MarketParams: mu must be finite");
}

ImpactDraw::ImpactDraw(double theta_, double k_) : theta(theta_), k(k_) {
    if (!(theta > 0.0)) throw std::invalid_argument("ImpactDraw: theta must be > 0");
    if (!(k >= 0.0 && k < 1.0))
        throw std::invalid_argument("ImpactDraw: k must lie in [0,1)");
}

ImpactDraw4::ImpactDraw4(double theta1_, double theta2_, double k1_, double k2_)
    : theta1(theta1_), theta2(theta2_), k1(k1_), k2(k2_) {
    if (!(theta1 > 0.0 && theta2 > 0.0))
        throw std::invalid_argument("ImpactDraw4: time scales must be > 0");
    if (!(k1 >= 0.0 && k2 >= 0.0 && k1 + k2 < 1.0))
        throw std::invalid_argument("ImpactDraw4: need k1, k2 >= 0 and k1 + k2 < 1");
}

ImpactDistribution::ImpactDistribution(Interval theta_range, Interval k_range)
    : theta_range_(theta_range), k_range_(k_range) {
    if (!(theta_range_.lo > 0.0) || theta_range_.hi < theta_range_.lo)
        throw std::invalid_argument("ImpactDistribution: bad theta range");
    if (!(k_range_.lo >= 0.0) || k_range_.hi < k_range_.lo || !(k_range_.hi < 1.0))
        throw std::invalid_argument("ImpactDistribution: k range must sit inside [0,1)");
}

ImpactDistribution::ImpactDistribution(Interval theta_range, Interval k_range,
                                       std::function<double(double, double)> density,
                                       double density_bound)
    : ImpactDistribution(theta_range, k_range) {
    if (!density) throw std::invalid_argument("ImpactDistribution: null density");
    if (!(density_bound > 0.0))
        throw std::invalid_argument("ImpactDistribution: density bound must be > 0");
    custom_density_ = std::move(density);
    density_bound_ = density_bound;
}

double ImpactDistribution::density(double theta, double k) const {
    if (theta < theta_range_.lo || theta > theta_range_.hi) return 0.0;
    if (k < k_range_.lo || k > k_range_.hi) return 0.0;
    if (custom_density_) return custom_density_(theta, k);
    const double area = theta_range_.width() * k_range_.width();
    if (!(area > 0.0))
        throw std::logic_error("ImpactDistribution: density undefined on a degenerate support");
    return 1.0 / area;
}

ImpactDraw ImpactDistribution::sample(PathRng& rng) const {
    auto draw_coord = [&rng](const Interval& iv) {
        return iv.degenerate() ? iv.lo : iv.lo + rng.uniform() * iv.width();
    };
    if (!custom_density_) {
        return ImpactDraw(draw_coord(theta_range_), draw_coord(k_range_));
    }
    // Rejection against the uniform envelope scaled by the supplied bound.
    for (int attempt = 0; attempt < 100000; ++attempt) {
        const double theta = draw_coord(theta_range_);
        const double k = draw_coord(k_range_);
        if (rng.uniform() * density_bound_ <= custom_density_(theta, k))
            return ImpactDraw(theta, k);
    }
    throw std::runtime_error("ImpactDistribution: rejection sampling failed; density bound too loose");
}

namespace {

// Nodes/weights of n-point Gauss-Legendre on [-1,1] via Newton on the
// Legendre recurrence.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
}

struct AxisNodes {
    std::vector<double> x;
    std::vector<double> w;  // includes the dx factor
};

AxisNodes axis_nodes(const Interval& iv, int n) {
    AxisNodes out;
    if (iv.degenerate()) {
        out.x = {iv.lo};
        out.w = {1.0};
        return out;
    }
    std::vector<double> xs, ws;
    gauss_legendre(n, xs, ws);
    const double c = iv.midpoint();
    const double h = 0.5 * iv.width();
    out.x.resize(n);
    out.w.resize(n);
    for (int i = 0; i < n; ++i) {
        out.x[i] = c + h * xs[i];
        out.w[i] = h * ws[i];
    }
    return out;
}

}  // namespace

std::vector<ImpactNode> ImpactDistribution::gauss_nodes(int n_theta, int n_k) const {
    if (n_theta < 1 || n_k < 1)
        throw std::invalid_argument("ImpactDistribution: node counts must be >= 1");
    const AxisNodes at = axis_nodes(theta_range_, n_theta);
    const AxisNodes ak = axis_nodes(k_range_, n_k);
    std::vector<ImpactNode> nodes;
    nodes.reserve(at.x.size() * ak.x.size());
    double total = 0.0;
    for (std::size_t i = 0; i < at.x.size(); ++i) {
        for (std::size_t j = 0; j < ak.x.size(); ++j) {
            double w = at.w[i] * ak.w[j];
            if (!theta_range_.degenerate() && !k_range_.degenerate()) {
                w *= density(at.x[i], ak.x[j]);
            } else if (custom_density_) {
                w *= custom_density_(at.x[i], ak.x[j]);
            }
            nodes.push_back({at.x[i], ak.x[j], w});
            total += w;
        }
    }
    if (!(total > 0.0))
        throw std::runtime_error("ImpactDistribution: density vanishes on the node grid");
    for (auto& n : nodes) n.weight /= total;
    return nodes;
}

double impact_g(double t, const ImpactDraw& draw) {
    if (t < 0.0) throw std::domain_error("impact_g: t must be >= 0");
    const double r = t / draw.theta;
    return 1.0 - draw.k * r * std::exp(1.0 - r);
}

double impact_g_prime(double t, const ImpactDraw& draw) {
    if (t < 0.0) throw std::domain_error("impact_g_prime: t must be >= 0");
    const double r = t / draw.theta;
    return (draw.k / draw.theta) * std::exp(1.0 - r) * (r - 1.0);
}

double impact_g4(double t, const ImpactDraw4& draw) {
    if (t < 0.0) throw std::domain_error("impact_g4: t must be >= 0");
    if (t < draw.theta1) {
        const double r = t / draw.theta1;
        return 1.0 - (draw.k1 + draw.k2) * r * std::exp(1.0 - r);
    }
    const double r = (t + draw.theta2 - draw.theta1) / draw.theta2;
    return 1.0 - draw.k1 - draw.k2 * r * std::exp(1.0 - r);
}

double drift_impacted(double t, double u, const ImpactDraw& draw,
                      const MarketParams& params) {
    if (t < u) throw std::domain_error("drift_impacted: require u <= t");
    const double elapsed = t - u;
    const double g = impact_g(elapsed, draw);
    if (!(g > 0.0)) throw std::domain_error("drift_impacted: impact factor not positive");
    return impact_g_prime(elapsed, draw) / g + params.mu;
}

double drift_market(double t, std::optional<double> tau, const ImpactDraw& draw,
                    const MarketParams& params) {
    // tau > t covers both the pre-liquidation regime and tau beyond the
    // horizon, where the pre-liquidation drift applies throughout.
    if (!tau.has_value() || t < *tau) return params.mu;
    return drift_impacted(t, *tau, draw, params);
}

}  // namespace liqsim
