#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "liqsim/closed_form.hpp"
#include "liqsim/errors.hpp"
#include "oracles.hpp"

using namespace liqsim;

namespace {
const MarketParams kRef{};
const ImpactDistribution kDist({0.05, 0.15}, {0.02, 0.08});
const ImpactDistribution kNoImpact({0.05, 0.15}, {0.0, 0.0});
const QuadratureSpec kTight{1e-8, 1e-11, 48};
}

TEST_CASE("normal cdf") {
    CHECK(normal_cdf(0.0) == 0.5);
    CHECK(normal_cdf(10.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(normal_cdf(-10.0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(normal_cdf(1.96) == doctest::Approx(0.975).epsilon(1e-4));
    // symmetry
    for (double x : {0.3, 1.1, 2.7}) CHECK(normal_cdf(x) + normal_cdf(-x) ==
                                           doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("survival probability limits") {
    MarketParams p = kRef;
    p.alpha = 1e-12;
    CHECK(prob_no_liquidation(p) == doctest::Approx(1.0).epsilon(1e-12));
    p.alpha = 1.0 - 1e-12;
    CHECK(prob_no_liquidation(p) == doctest::Approx(0.0).epsilon(1e-6));
    p = kRef;
    const double v = prob_no_liquidation(p);
    CHECK(v > 0.0);
    CHECK(v < 1.0);
}

TEST_CASE("tau density integrates to the crossing probability") {
    const double surv = prob_no_liquidation(kRef);
    const double integral = integrate_checked(
        [&](double t) { return t <= 0.0 ? 0.0 : tau_density(t, kRef); }, 0.0, kRef.horizon,
        kTight);
    CHECK(integral == doctest::Approx(1.0 - surv).epsilon(1e-6));
    CHECK(tau_density(1e-12, kRef) == 0.0);
    CHECK_THROWS_AS(tau_density(0.0, kRef), std::domain_error);
}

TEST_CASE("tau density equals the CDF derivative") {
    // F(t) = 1 - P(tau > t); differentiate numerically at t = 0.25
    auto cdf = [&](double t) {
        MarketParams p = kRef;
        p.horizon = t;
        return 1.0 - prob_no_liquidation(p);
    };
    const double fd = oracles::central_diff(cdf, 0.25, 1e-5);
    CHECK(tau_density(0.25, kRef) == doctest::Approx(fd).epsilon(1e-6));
}

TEST_CASE("joint density of terminal value and minimum") {
    const KappaParams kp = KappaParams::from_market(kRef);
    CHECK(joint_density_bm_min(0.5, 0.1, 1.0, kp.kappa) == 0.0);   // min must be < 0
    CHECK(joint_density_bm_min(-0.5, -0.2, 1.0, kp.kappa) == 0.0); // need x > y

    const double pad = 10.0;
    auto inner = [&](double y) {
        return integrate_checked(
            [&](double x) { return joint_density_bm_min(x, y, 1.0, kp.kappa); }, y, y + pad,
            kTight);
    };
    const double total = integrate_checked(inner, -8.0, 0.0, kTight);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-5));

    const double above_barrier = integrate_checked(inner, kp.a, 0.0, kTight);
    CHECK(above_barrier == doctest::Approx(prob_no_liquidation(kRef)).epsilon(1e-5));
}

TEST_CASE("impacted drift squared integral") {
    CHECK(impact_drift_sq_integral(1.0, 0.1, 0.05, kRef) == 0.0);
    const double flat = impact_drift_sq_integral(0.3, 0.1, 0.0, kRef);
    CHECK(flat == doctest::Approx(kRef.mu * kRef.mu * 0.7 /
                                  (2.0 * kRef.sigma * kRef.sigma)).epsilon(1e-10));
    // Richardson-extrapolated trapezoid oracle
    const ImpactDraw d(0.1, 0.05);
    auto integrand = [&](double s) {
        const double mu_i = impact_g_prime(s, d) / impact_g(s, d) + kRef.mu;
        return mu_i * mu_i / (2.0 * kRef.sigma * kRef.sigma);
    };
    const double ref = oracles::romberg(integrand, 0.0, 0.5, 18);
    CHECK(impact_drift_sq_integral(0.5, 0.1, 0.05, kRef, kTight) ==
          doctest::Approx(ref).epsilon(1e-8));
}

TEST_CASE("fully informed log value reduces to Merton") {
    MarketParams far = kRef;
    far.alpha = 1e-8;
    CHECK(v_log_fully(far, ImpactDraw(0.1, 0.05), 80.0, kTight) ==
          doctest::Approx(merton_log_value(far, 80.0)).epsilon(1e-6));
    // zero impact magnitude: liquidation changes nothing
    CHECK(v_log_fully(kRef, ImpactDraw(0.1, 0.0), 80.0, kTight) ==
          doctest::Approx(merton_log_value(kRef, 80.0)).epsilon(1e-6));
}

TEST_CASE("uninformed values reduce to Merton without impact") {
    CHECK(v_log_uninformed(kRef, kNoImpact, 80.0, kTight) ==
          doctest::Approx(merton_log_value(kRef, 80.0)).epsilon(1e-6));
    CHECK(v_power_uninformed(kRef, kNoImpact, 80.0, 0.5, kTight) ==
          doctest::Approx(merton_power_value(kRef, 80.0, 0.5)).epsilon(1e-6));
    MarketParams far = kRef;
    far.alpha = 1e-8;
    CHECK(v_power_uninformed(far, kDist, 80.0, 0.5, kTight) ==
          doctest::Approx(merton_power_value(far, 80.0, 0.5)).epsilon(1e-6));
}

TEST_CASE("reference-config values") {
    // power, uninformed: inside the reported interval
    const double pow_unf = v_power_uninformed(kRef, kDist, 80.0, 0.5);
    CHECK(pow_unf > 18.8796 - 0.1);
    CHECK(pow_unf < 18.9661 + 0.1);

    // log, fully informed averaged over the (Theta,K) law: reported
    // interval plus the discretization allowance
    const double log_full = v_log_fully_avg(kRef, kDist, 80.0);
    CHECK(log_full > 4.8219 - 0.02);
    CHECK(log_full < 4.8346 + 0.02);

    // log, uninformed: the analytic value must match an independent
    // in-test simulation of the same strategy (root cross-check; the
    // externally reported 4.3665 corresponds to a different fraction
    // and is covered by the acceptance report)
    const double log_unf = v_log_uninformed(kRef, kDist, 80.0);
    oracles::Gen gen(4242);
    const int n = 40000, m = 500;
    const double dt = kRef.horizon / m, sdt = std::sqrt(dt);
    const double pi = kRef.mu / (kRef.sigma * kRef.sigma);
    double acc = 0.0, acc2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double theta = gen.uniform(0.05, 0.15), k = gen.uniform(0.02, 0.08);
        double s = kRef.s0, x = 80.0;
        int tau = -1;
        for (int step = 0; step < m; ++step) {
            double mu_m = kRef.mu;
            if (tau >= 0) {
                const ImpactDraw d(theta, k);
                const double el = (step - tau) * dt;
                mu_m = impact_g_prime(el, d) / impact_g(el, d) + kRef.mu;
            }
            const double dw = sdt * gen.normal();
            x *= std::exp((pi * mu_m - 0.5 * pi * pi * kRef.sigma * kRef.sigma) * dt +
                          pi * kRef.sigma * dw);
            s *= std::exp((kRef.mu - 0.5 * kRef.sigma * kRef.sigma) * dt + kRef.sigma * dw);
            if (tau < 0 && s <= kRef.barrier()) tau = step + 1;
        }
        acc += std::log(x);
        acc2 += std::log(x) * std::log(x);
    }
    const double mean = acc / n;
    const double se = std::sqrt((acc2 / n - mean * mean) / (n - 1));
    CHECK(std::abs(log_unf - mean) < 3.0 * se + 0.01);
}

TEST_CASE("information ordering of the log values") {
    const double unf = v_log_uninformed(kRef, kDist, 80.0);
    const double full = v_log_fully_avg(kRef, kDist, 80.0);
    PartialValueBudget budget;
    budget.t_nodes = 12;
    budget.inner_samples = 96;
    const McValue part = v_log_partial(kRef, kDist, 80.0, budget, {2024, 0});
    CHECK(unf < part.value - 3.0 * part.se);
    CHECK(part.value + 3.0 * part.se < full);
}

TEST_CASE("partially informed value, degenerate prior") {
    // point-mass prior: the filter knows the draw, so the value equals
    // the fully informed one (inner MC is deterministic; the remaining
    // error is the t-grid interpolation and inner time step)
    const ImpactDraw draw(0.1, 0.05);
    const ImpactDistribution point({draw.theta, draw.theta}, {draw.k, draw.k});
    PartialValueBudget budget;
    budget.t_nodes = 48;
    budget.inner_samples = 2;
    budget.steps_per_year = 2000;
    const McValue got = v_log_partial(kRef, point, 80.0, budget, {10, 0});
    const double expect = v_log_fully(kRef, draw, 80.0);
    CHECK(got.se < 1e-9);
    CHECK(got.value == doctest::Approx(expect).epsilon(1.5e-3));
}

TEST_CASE("partially informed value, no impact") {
    PartialValueBudget budget;
    budget.t_nodes = 8;
    budget.inner_samples = 4;
    const McValue got = v_log_partial(kRef, kNoImpact, 80.0, budget, {11, 0});
    CHECK(got.value == doctest::Approx(merton_log_value(kRef, 80.0)).epsilon(1e-6));
}

TEST_CASE("partially informed value at the reference config") {
    PartialValueBudget budget;  // defaults
    const McValue got = v_log_partial(kRef, kDist, 80.0, budget, {303, 0});
    // reported interval plus discretization allowance and the inner SE
    CHECK(got.value > 4.7520 - 0.02 - 2.0 * got.se);
    CHECK(got.value < 4.7638 + 0.02 + 2.0 * got.se);
}

TEST_CASE("quadrature tolerance halving stability") {
    const QuadratureSpec base;
    const double v1 = v_log_uninformed(kRef, kDist, 80.0, base);
    const double v2 = v_log_uninformed(kRef, kDist, 80.0, base.halved());
    CHECK(std::abs(v1 - v2) < base.rel_tol * std::abs(v1) + 1e-8);
    const double p1 = v_power_uninformed(kRef, kDist, 80.0, 0.5, base);
    const double p2 = v_power_uninformed(kRef, kDist, 80.0, 0.5, base.halved());
    CHECK(std::abs(p1 - p2) < base.rel_tol * std::abs(p1) + 1e-8);
}
