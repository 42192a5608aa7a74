#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "liqsim/bsde.hpp"
#include "liqsim/errors.hpp"
#include "oracles.hpp"

using namespace liqsim;

namespace {
const MarketParams kRef{};
const ImpactDistribution kDist({0.05, 0.15}, {0.02, 0.08});
const TimeGrid kGrid(1.0, 250);

struct FlatSetup {
    MarketParams params;
    std::vector<SimulatedPath> batch;
};

FlatSetup no_trigger_batch(int n, double mu, RngSpec rng) {
    MarketParams params = kRef;
    params.mu = mu;
    params.alpha = 1e-9;
    const ImpactDistribution none({0.05, 0.15}, {0.0, 0.0});
    return {params, simulate_batch(kGrid, params, none, n, rng, {})};
}
}  // namespace

TEST_CASE("regress recovers exact linear structure") {
    oracles::Gen gen(1);
    const int n = 500, nf = 6;
    std::vector<double> feats(n * nf), targets(n);
    const std::vector<double> truth = {0.4, -1.2, 2.0, 0.7, -0.3, 1.1};
    for (int i = 0; i < n; ++i) {
        const double x = gen.uniform(-1, 1), y = gen.uniform(-1, 1);
        const double row[6] = {1.0, x, x * x, y, y * y, x * y};
        double t = 0.0;
        for (int j = 0; j < nf; ++j) {
            feats[i * nf + j] = row[j];
            t += truth[j] * row[j];
        }
        targets[i] = t;
    }
    const auto coef = regress(targets, feats, nf, 0.0);
    for (int j = 0; j < nf; ++j) CHECK(coef[j] == doctest::Approx(truth[j]).epsilon(1e-9));

    // constant targets load only the intercept
    std::fill(targets.begin(), targets.end(), 4.2);
    const auto c2 = regress(targets, feats, nf, 0.0);
    CHECK(c2[0] == doctest::Approx(4.2).epsilon(1e-9));
    for (int j = 1; j < nf; ++j) CHECK(c2[j] == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("regress matches the dense normal-equations oracle") {
    oracles::Gen gen(2);
    const int n = 10000, nf = 6;
    std::vector<double> feats(static_cast<std::size_t>(n) * nf), targets(n);
    for (int i = 0; i < n; ++i) {
        const double x = gen.uniform(-2, 2), y = gen.uniform(-2, 2);
        const double row[6] = {1.0, x, x * x, y, y * y, x * y};
        for (int j = 0; j < nf; ++j) feats[i * nf + j] = row[j];
        targets[i] = gen.normal();
    }
    for (double ridge : {0.0, 1e-6, 1e-2}) {
        const auto mine = regress(targets, feats, nf, ridge);
        const auto ref = oracles::least_squares(targets, feats, nf, ridge);
        for (int j = 0; j < nf; ++j) CHECK(mine[j] == doctest::Approx(ref[j]).epsilon(1e-8));
    }
}

TEST_CASE("regress rejects a rank-deficient design without ridge") {
    const int n = 100, nf = 3;
    std::vector<double> feats(n * nf), targets(n);
    for (int i = 0; i < n; ++i) {
        feats[i * nf + 0] = 1.0;
        feats[i * nf + 1] = 2.0;  // collinear with the intercept
        feats[i * nf + 2] = i;
        targets[i] = i;
    }
    CHECK_THROWS_AS(regress(targets, feats, nf, 0.0), NumericalError);
    CHECK_NOTHROW(regress(targets, feats, nf, 1e-8));
    std::vector<double> short_t = {1.0, 2.0};
    CHECK_THROWS_AS(regress(short_t, feats, nf, 0.0), std::invalid_argument);
}

TEST_CASE("zero driver keeps H at one") {
    const auto [params, batch] = no_trigger_batch(2000, 0.0, {41, 0});
    BsdeConfig cfg;
    cfg.ridge = 0.0;  // minimum-norm fallback handles the flat cross-sections
    const BsdeSolution sol = solve_backward(batch, kGrid, params, cfg);
    double worst = 0.0;
    for (int m = 0; m <= kGrid.steps; ++m)
        for (int i = 0; i < sol.n_paths; ++i)
            worst = std::max(worst, std::abs(sol.h_at(m, i) - 1.0));
    CHECK(worst <= 1e-8);  // rounding accumulated over 250 exact fits
    // Z is projection noise; its cross-sectional mean is the mean of
    // dW/dt, so bound it at four standard deviations
    const double bound = 4.0 / std::sqrt(kGrid.dt * sol.n_paths);
    for (int m = 0; m < kGrid.steps; m += 50) {
        double mean = 0.0;
        for (int i = 0; i < sol.n_paths; ++i) mean += sol.z_at(m, i);
        mean /= sol.n_paths;
        CHECK(std::abs(mean) < bound);
    }
}

TEST_CASE("terminal condition holds exactly") {
    const auto batch = simulate_batch(kGrid, kRef, kDist, 512, {42, 0}, {});
    // drop draws past the one-step stability limit of the H-update
    std::vector<SimulatedPath> feasible;
    const double limit = bsde_drift_limit(kRef, 0.5, kGrid.dt);
    for (const auto& p : batch)
        if (!p.tau_index || std::abs(kRef.mu - p.draw.k / p.draw.theta * M_E) < limit)
            feasible.push_back(p);
    const BsdeSolution sol = solve_backward(feasible, kGrid, kRef, BsdeConfig{});
    for (int i = 0; i < sol.n_paths; ++i) CHECK(sol.h_at(kGrid.steps, i) == 1.0);
}

TEST_CASE("constant drift recovers the closed-form H0") {
    const auto [params, batch] = no_trigger_batch(20000, kRef.mu, {43, 0});
    const BsdeSolution sol = solve_backward(batch, kGrid, params, BsdeConfig{});
    const double p = 0.5;
    const double expect = std::exp(p * kRef.mu * kRef.mu * kRef.horizon /
                                   (2.0 * (1.0 - p) * (1.0 - p) * kRef.sigma * kRef.sigma));
    for (int i = 0; i < 5; ++i)
        CHECK(sol.h_at(0, i) == doctest::Approx(expect).epsilon(0.01));
}

TEST_CASE("division guard rejects oversized drift steps") {
    // a coarse grid plus the extreme corner of the draw box trips the
    // one-step denominator
    const TimeGrid coarse(1.0, 25);
    const ImpactDistribution corner({0.05, 0.05}, {0.08, 0.08});
    MarketParams params = kRef;
    std::vector<SimulatedPath> batch;
    for (std::uint64_t i = 0; batch.size() < 64 && i < 50000; ++i) {
        SimulatedPath path = simulate_path(coarse, params, corner, {44, 0}, i, {});
        if (path.tau_index) batch.push_back(std::move(path));
    }
    REQUIRE(batch.size() == 64);
    CHECK_THROWS_AS(solve_backward(batch, coarse, params, BsdeConfig{}), NumericalError);
}

TEST_CASE("post-trigger solution tracks the explicit exponential") {
    // Single known draw so the explicit solution is sharp. The
    // regression state (price, running min) cannot resolve the time
    // since the trigger, so the pooled backward fit carries a level
    // bias; it must still track the explicit solution broadly.
    const ImpactDistribution point({0.1, 0.1}, {0.05, 0.05});
    const auto batch = simulate_batch(kGrid, kRef, point, 8192, {45, 0}, {});
    const BsdeSolution sol = solve_backward(batch, kGrid, kRef, BsdeConfig{});
    const double p = 0.5;
    const double scale = p / (2.0 * (1.0 - p) * (1.0 - p) * kRef.sigma * kRef.sigma);
    double ratio_sum = 0.0;
    long count = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& path = batch[i];
        if (!path.tau_index) continue;
        const int tau = *path.tau_index;
        for (int m = tau; m < kGrid.steps; m += 10) {
            // int_t^T (mu^I)^2 dv via the dense-trapezoid oracle
            auto f = [&](double s) {
                const double mu_i =
                    impact_g_prime(s, path.draw) / impact_g(s, path.draw) + kRef.mu;
                return mu_i * mu_i;
            };
            const double lo = (m - tau) * kGrid.dt;
            const double hi = kGrid.horizon - kGrid.time(tau);
            const double explicit_h = std::exp(scale * oracles::romberg(f, lo, hi, 12));
            ratio_sum += sol.h_at(m, i) / explicit_h;
            ++count;
        }
    }
    REQUIRE(count > 1000);
    const double mean_ratio = ratio_sum / count;
    CHECK(mean_ratio > 0.88);
    CHECK(mean_ratio < 1.15);
}

TEST_CASE("strategy from the solution") {
    // hand-built solution with zero hedging demand: pure Merton fraction
    const auto batch = simulate_batch(kGrid, kRef, kDist, 4, {46, 0}, {});
    BsdeSolution flat;
    flat.n_paths = 4;
    flat.steps = kGrid.steps;
    flat.h.assign(static_cast<std::size_t>(kGrid.steps + 1) * 4, 1.0);
    flat.z.assign(static_cast<std::size_t>(kGrid.steps) * 4, 0.0);
    const auto pi = strategy_from_solution(flat, batch, kGrid, kRef, BsdeConfig{});
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& path = batch[i];
        const int tau = path.tau_index.value_or(kGrid.steps + 1);
        for (int m = 0; m < kGrid.steps; ++m) {
            const double got = pi[static_cast<std::size_t>(m) * 4 + i];
            if (m < tau) {
                CHECK(got == doctest::Approx(3.5).epsilon(1e-12));
            } else {
                const double mu_i =
                    drift_impacted((m - tau) * kGrid.dt, 0.0, path.draw, kRef);
                CHECK(got ==
                      doctest::Approx(mu_i / (0.5 * kRef.sigma * kRef.sigma)).epsilon(1e-12));
            }
        }
        if (path.tau_index && *path.tau_index < kGrid.steps) {
            const double at_tau = pi[static_cast<std::size_t>(*path.tau_index) * 4 + i];
            CHECK(at_tau < 0.0);  // deep short right after the trigger
        }
    }
    // far after the trigger the fraction reverts toward the Merton level
    const double near = drift_impacted(0.0, 0.0, ImpactDraw(0.1, 0.05), kRef) /
                        (0.5 * kRef.sigma * kRef.sigma);
    const double far = drift_impacted(2.0, 0.0, ImpactDraw(0.1, 0.05), kRef) /
                       (0.5 * kRef.sigma * kRef.sigma);
    CHECK(far == doctest::Approx(3.5).epsilon(1e-3));
    CHECK(std::abs(far - 3.5) < std::abs(near - 3.5));
}

TEST_CASE("nonpositive H is rejected in the strategy map") {
    const auto batch = simulate_batch(kGrid, kRef, kDist, 2, {47, 0}, {});
    BsdeSolution bad;
    bad.n_paths = 2;
    bad.steps = kGrid.steps;
    bad.h.assign(static_cast<std::size_t>(kGrid.steps + 1) * 2, 1.0);
    bad.z.assign(static_cast<std::size_t>(kGrid.steps) * 2, 0.0);
    bad.h[0] = -0.5;
    bad.h[1] = -0.5;
    CHECK_THROWS_AS(strategy_from_solution(bad, batch, kGrid, kRef, BsdeConfig{}),
                    NumericalError);
}
