#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "liqsim/market_model.hpp"
#include "liqsim/quadrature.hpp"
#include "liqsim/rng.hpp"
#include "oracles.hpp"

using namespace liqsim;

namespace {
const MarketParams kRef{};  // mu=0.07, sigma=0.2, s0=80, alpha=0.9, T=1
}

TEST_CASE("impact factor pinned values") {
    const ImpactDraw draw(0.1, 0.1);
    CHECK(impact_g(0.0, draw) == 1.0);
    CHECK(impact_g(0.1, draw) == doctest::Approx(0.9).epsilon(1e-12));  // minimum 1-K at Theta
    const double first_day = 1.0 - impact_g(1.0 / 250.0, draw);
    CHECK(first_day > 0.009);
    CHECK(first_day < 0.011);
    CHECK_THROWS_AS(impact_g(-1e-9, draw), std::domain_error);
}

TEST_CASE("impact factor bounds over random draws") {
    oracles::Gen gen(101);
    for (int rep = 0; rep < 100; ++rep) {
        const ImpactDraw draw(gen.uniform(0.01, 0.5), gen.uniform(0.0, 0.95));
        for (double t : {0.0, 0.001, 0.01, 0.05, 0.1, 0.3, 0.7, 1.0, 5.0}) {
            const double g = impact_g(t, draw);
            CHECK(g <= 1.0 + 1e-15);
            CHECK(g >= 1.0 - draw.k - 1e-15);
        }
        CHECK(impact_g(draw.theta, draw) == doctest::Approx(1.0 - draw.k).epsilon(1e-12));
    }
}

TEST_CASE("impact derivative matches finite differences") {
    const ImpactDraw d(0.1, 0.1);
    CHECK(impact_g_prime(0.1, d) == doctest::Approx(0.0).epsilon(1e-14));
    // value at zero: -(K/Theta) e
    CHECK(impact_g_prime(0.0, d) == doctest::Approx(-M_E).epsilon(1e-12));
    const double fd0 = (impact_g(1e-7, d) - impact_g(0.0, d)) / 1e-7;  // one-sided at 0
    CHECK(impact_g_prime(0.0, d) == doctest::Approx(fd0).epsilon(1e-5));
    auto g = [&](double t) { return impact_g(t, d); };
    CHECK(impact_g_prime(0.05, d) ==
          doctest::Approx(oracles::central_diff(g, 0.05, 1e-6)).epsilon(1e-6));

    oracles::Gen gen(7);
    for (int rep = 0; rep < 100; ++rep) {
        const ImpactDraw draw(gen.uniform(0.02, 0.4), gen.uniform(0.01, 0.9));
        auto gd = [&](double t) { return impact_g(t, draw); };
        for (double t = 0.001; t <= 1.0; t += 0.1) {
            const double analytic = impact_g_prime(t, draw);
            const double numeric = oracles::central_diff(gd, t, 1e-6);
            CHECK(analytic == doctest::Approx(numeric).epsilon(1e-5));
        }
    }
}

TEST_CASE("two-scale impact factor") {
    const ImpactDraw4 d(0.05, 0.1, 0.05, 0.05);
    CHECK(impact_g4(0.0, d) == 1.0);

    // both branch formulas at the knot
    const double left = 1.0 - (d.k1 + d.k2) * 1.0 * std::exp(1.0 - 1.0);
    const double right = 1.0 - d.k1 - d.k2 * 1.0 * std::exp(1.0 - 1.0);
    CHECK(std::abs(left - right) < 1e-12);
    CHECK(impact_g4(d.theta1, d) == doctest::Approx(1.0 - d.k1 - d.k2).epsilon(1e-12));

    // long-time limit is 1 - K1
    CHECK(impact_g4(100.0 * d.theta2, d) == doctest::Approx(0.95).epsilon(1e-6));

    // continuity across a dense grid, knot included
    double prev = impact_g4(0.0, d);
    for (int i = 1; i <= 4000; ++i) {
        const double t = 0.8 * i / 4000.0;
        const double g = impact_g4(t, d);
        CHECK(std::abs(g - prev) < 5e-3);  // no jump at the 2e-4 grid scale
        prev = g;
    }
    CHECK_THROWS_AS(ImpactDraw4(0.05, 0.1, 0.5, 0.5), std::invalid_argument);  // k1+k2 = 1
}

TEST_CASE("impacted drift") {
    const ImpactDraw d(0.1, 0.1);
    CHECK(drift_impacted(0.3, 0.3, d, kRef) == doctest::Approx(0.07 - M_E).epsilon(1e-12));
    CHECK(drift_impacted(0.4, 0.3, d, kRef) == doctest::Approx(kRef.mu).epsilon(1e-12));
    CHECK(drift_impacted(50.0, 0.0, d, kRef) == doctest::Approx(kRef.mu).epsilon(1e-6));
    CHECK_THROWS_AS(drift_impacted(0.1, 0.2, d, kRef), std::domain_error);
}

TEST_CASE("market drift regimes") {
    const ImpactDraw d(0.1, 0.05);
    CHECK(drift_market(0.2, 0.5, d, kRef) == doctest::Approx(0.07));
    CHECK(drift_market(0.5, 0.5, d, kRef) ==
          doctest::Approx(0.07 - 0.5 * M_E).epsilon(1e-12));
    CHECK(drift_market(0.9, std::nullopt, d, kRef) == doctest::Approx(0.07));
    // single discontinuity at tau: continuous left of it, jump across it
    const double tau = 0.5;
    const double before = drift_market(tau - 1e-9, tau, d, kRef);
    const double after = drift_market(tau, tau, d, kRef);
    CHECK(before == doctest::Approx(kRef.mu));
    CHECK(after < before - 1.0);
    double prev = after;
    for (double t = tau; t <= 1.0; t += 1e-3) {
        const double m = drift_market(t, tau, d, kRef);
        CHECK(std::abs(m - prev) < 0.15);  // smooth post-trigger section
        prev = m;
    }
}

TEST_CASE("draw and parameter validation") {
    CHECK_THROWS_AS(ImpactDraw(0.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(ImpactDraw(0.1, 1.0), std::invalid_argument);  // strict k < 1
    CHECK_NOTHROW(ImpactDraw(0.1, 0.0));
    MarketParams bad = kRef;
    bad.alpha = 1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = kRef;
    bad.sigma = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("impact distribution density and nodes") {
    const ImpactDistribution dist({0.05, 0.15}, {0.02, 0.08});
    // density integrates to 1 over its support (iterated quadrature)
    const QuadratureSpec quad{1e-9, 1e-12, 40};
    auto inner = [&](double theta) {
        return integrate_checked([&](double k) { return dist.density(theta, k); }, 0.02, 0.08,
                                 quad);
    };
    const double total = integrate_checked(inner, 0.05, 0.15, quad);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));

    const auto nodes = dist.gauss_nodes(8, 8);
    double wsum = 0.0;
    for (const auto& n : nodes) wsum += n.weight;
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));

    // degenerate k: single node at the point mass
    const ImpactDistribution point({0.05, 0.15}, {0.0, 0.0});
    const auto pnodes = point.gauss_nodes(4, 4);
    CHECK(pnodes.size() == 4);
    for (const auto& n : pnodes) CHECK(n.k == 0.0);
}

TEST_CASE("sampling follows the density") {
    const ImpactDistribution uniform({0.05, 0.15}, {0.02, 0.08});
    PathRng rng({9, 0}, 0);
    double mean_theta = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) mean_theta += uniform.sample(rng).theta;
    mean_theta /= n;
    CHECK(mean_theta == doctest::Approx(0.1).epsilon(0.01));

    // custom density proportional to theta: mean = int t^2 / int t
    const ImpactDistribution tilted(
        {0.05, 0.15}, {0.02, 0.08},
        [](double theta, double) { return theta / (0.1 * 0.1 * 0.06); }, 30.0);
    PathRng rng2({9, 1}, 0);
    double mean2 = 0.0;
    for (int i = 0; i < n; ++i) mean2 += tilted.sample(rng2).theta;
    mean2 /= n;
    const double expect = (std::pow(0.15, 3) - std::pow(0.05, 3)) / 3.0 /
                          ((std::pow(0.15, 2) - std::pow(0.05, 2)) / 2.0);
    CHECK(mean2 == doctest::Approx(expect).epsilon(0.01));
}
