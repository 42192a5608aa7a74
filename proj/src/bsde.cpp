#include "liqsim/bsde.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "liqsim/errors.hpp"
#include "liqsim/parallel.hpp"

namespace liqsim {

namespace {

int basis_size(BasisMode mode) { return mode == BasisMode::PaperFaithful ? 6 : 8; }

// Fills one feature row. x and y arrive pre-scaled to O(1): column
// scaling leaves the fitted values unchanged but keeps the normal
// equations well-conditioned (raw squared prices reach 1e4). Elapsed is
// (t - tau)+ in years.
inline void fill_features(double x, double y, double elapsed, BasisMode mode, double* row) {
    row[0] = 1.0;
    row[1] = x;
    row[2] = x * x;
    row[3] = y;
    row[4] = y * y;
    row[5] = x * y;
    if (mode == BasisMode::ExtendedElapsed) {
        row[6] = elapsed;
        row[7] = elapsed * elapsed;
    }
}

struct NormalSolve {
    std::vector<double> coef_h;
    std::vector<double> coef_z;
    double ridge_used = 0.0;
};

// One factorization, two right-hand sides. ridge < 0 selects the auto
// value; ridge == 0 falls back to the minimum-norm solution when the
// Gram matrix is singular but the system is consistent (constant
// cross-sections with representable targets), and fails otherwise.
NormalSolve solve_normal_equations(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs_h,
                                   const Eigen::VectorXd& rhs_z, double ridge) {
    const int nb = static_cast<int>(gram.rows());
    double ridge_used = ridge;
    if (ridge < 0.0) ridge_used = 1e-8 * gram.trace() / nb;

    NormalSolve out;
    out.ridge_used = ridge_used;
    if (ridge_used > 0.0) {
        Eigen::MatrixXd g = gram;
        g.diagonal().array() += ridge_used;
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
        const Eigen::VectorXd ch = ldlt.solve(rhs_h);
        const Eigen::VectorXd cz = ldlt.solve(rhs_z);
        out.coef_h.assign(ch.data(), ch.data() + nb);
        out.coef_z.assign(cz.data(), cz.data() + nb);
        return out;
    }

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const double max_eig = eig.eigenvalues().maxCoeff();
    const double tol = std::max(max_eig, 1.0) * 1e-13;
    auto solve_one = [&](const Eigen::VectorXd& rhs) {
        Eigen::VectorXd beta = eig.eigenvectors().transpose() * rhs;
        for (int i = 0; i < nb; ++i) {
            if (eig.eigenvalues()[i] > tol) {
                beta[i] /= eig.eigenvalues()[i];
            } else {
                if (std::abs(beta[i]) > tol * (1.0 + rhs.norm()))
                    throw NumericalError("regression design is rank-deficient with ridge 0");
                beta[i] = 0.0;
            }
        }
        return Eigen::VectorXd(eig.eigenvectors() * beta);
    };
    const Eigen::VectorXd ch = solve_one(rhs_h);
    const Eigen::VectorXd cz = solve_one(rhs_z);
    out.coef_h.assign(ch.data(), ch.data() + nb);
    out.coef_z.assign(cz.data(), cz.data() + nb);
    return out;
}

// Drift of path i at step m under either source.
class DriftField {
public:
    DriftField(std::span<const SimulatedPath> batch, const TimeGrid& grid,
               const MarketParams& params, DriftSource source,
               std::span<const FilterOutput> filters)
        : batch_(batch), grid_(grid), params_(params), source_(source), filters_(filters) {}

    double operator()(int m, int i) const {
        if (source_ == DriftSource::Filtered) return filters_[i].mu_bar[m];
        const SimulatedPath& path = batch_[i];
        if (!path.tau_index || m < *path.tau_index) return params_.mu;
        return drift_impacted((m - *path.tau_index) * grid_.dt, 0.0, path.draw, params_);
    }

private:
    std::span<const SimulatedPath> batch_;
    const TimeGrid& grid_;
    const MarketParams& params_;
    DriftSource source_;
    std::span<const FilterOutput> filters_;
};

BsdeSolution run_backward(std::span<const SimulatedPath> batch, const TimeGrid& grid,
                          const MarketParams& params, const BsdeConfig& cfg,
                          std::span<const FilterOutput> filters,
                          const std::vector<std::vector<double>>* innovations,
                          const BsdeStepCallback& callback) {
    if (batch.empty()) throw std::invalid_argument("solve_backward: empty batch");
    if (!(cfg.p > 0.0 && cfg.p < 1.0))
        throw std::invalid_argument("solve_backward: p must lie in (0,1)");
    params.validate();

    const int n = static_cast<int>(batch.size());
    const int M = grid.steps;
    const int nb = basis_size(cfg.basis);
    const double dt = grid.dt;
    const double sigma = params.sigma;
    const double p = cfg.p;
    const double barrier = params.barrier();
    const double z_coef = p / ((1.0 - p) * sigma);
    const double h_coef = p / (2.0 * (1.0 - p) * (1.0 - p) * sigma * sigma);

    const DriftField drift(batch, grid, params, cfg.drift_source, filters);

    BsdeSolution sol;
    sol.n_paths = n;
    sol.steps = M;
    sol.h.assign(static_cast<std::size_t>(M + 1) * n, 1.0);
    sol.z.assign(static_cast<std::size_t>(M) * n, 0.0);

    std::vector<double> features(static_cast<std::size_t>(n) * nb);
    std::vector<double> target_h(n), target_z(n);

    for (int m = M - 1; m >= 0; --m) {
        const double* h_next = sol.h.data() + static_cast<std::size_t>(m + 1) * n;
        double* h_here = sol.h.data() + static_cast<std::size_t>(m) * n;
        double* z_here = sol.z.data() + static_cast<std::size_t>(m) * n;

        const double inv_scale = 1.0 / params.s0;
        parallel_for(0, n, [&](int i) {
            const SimulatedPath& path = batch[i];
            const double elapsed =
                (path.tau_index && m >= *path.tau_index) ? (m - *path.tau_index) * dt : 0.0;
            fill_features((path.s_market[m] - barrier) * inv_scale,
                          (path.run_min[m] - barrier) * inv_scale, elapsed, cfg.basis,
                          features.data() + static_cast<std::size_t>(i) * nb);
            const double inc = innovations ? (*innovations)[i][m] : path.dw[m];
            target_h[i] = h_next[i];
            target_z[i] = h_next[i] * inc / dt;
        });

        // Cross-sectional normal equations, shared by both targets.
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(nb, nb);
        Eigen::VectorXd rhs_h = Eigen::VectorXd::Zero(nb);
        Eigen::VectorXd rhs_z = Eigen::VectorXd::Zero(nb);
        for (int i = 0; i < n; ++i) {
            const double* row = features.data() + static_cast<std::size_t>(i) * nb;
            for (int r = 0; r < nb; ++r) {
                for (int c = r; c < nb; ++c) gram(r, c) += row[r] * row[c];
                rhs_h[r] += row[r] * target_h[i];
                rhs_z[r] += row[r] * target_z[i];
            }
        }
        gram = gram.selfadjointView<Eigen::Upper>();

        const NormalSolve fit = solve_normal_equations(gram, rhs_h, rhs_z, cfg.ridge);

        parallel_for(0, n, [&](int i) {
            const double* row = features.data() + static_cast<std::size_t>(i) * nb;
            double eh = 0.0, ez = 0.0;
            for (int r = 0; r < nb; ++r) {
                eh += fit.coef_h[r] * row[r];
                ez += fit.coef_z[r] * row[r];
            }
            const double mu = drift(m, i);
            const double denom = 1.0 - h_coef * mu * mu * dt;
            if (!(denom > 0.0))
                throw NumericalError("solve_backward: H-update denominator not positive "
                                     "(drift too large for this step size)");
            z_here[i] = ez;
            h_here[i] = (eh + z_coef * mu * ez * dt) / denom;
        });

        if (callback) {
            double ss_res = 0.0, ss_tot = 0.0, mean_h = 0.0;
            for (int i = 0; i < n; ++i) mean_h += target_h[i];
            mean_h /= n;
            for (int i = 0; i < n; ++i) {
                const double* row = features.data() + static_cast<std::size_t>(i) * nb;
                double eh = 0.0;
                for (int r = 0; r < nb; ++r) eh += fit.coef_h[r] * row[r];
                ss_res += (target_h[i] - eh) * (target_h[i] - eh);
                ss_tot += (target_h[i] - mean_h) * (target_h[i] - mean_h);
            }
            BsdeStepDiagnostics diag;
            diag.m = m;
            diag.n_features = nb;
            diag.features = features;
            diag.target_h = target_h;
            diag.target_z = target_z;
            diag.coef_h = fit.coef_h;
            diag.coef_z = fit.coef_z;
            diag.ridge = fit.ridge_used;
            diag.r2_h = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
            callback(diag);
        }
    }
    return sol;
}

}  // namespace

std::vector<double> regress(std::span<const double> targets, std::span<const double> features,
                            int n_features, double ridge) {
    if (n_features < 1) throw std::invalid_argument("regress: need features");
    const int n = static_cast<int>(targets.size());
    if (features.size() != static_cast<std::size_t>(n) * n_features)
        throw std::invalid_argument("regress: feature matrix shape mismatch");
    if (n < n_features) throw std::invalid_argument("regress: fewer rows than features");
    if (ridge < 0.0) throw std::invalid_argument("regress: ridge must be >= 0");

    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n_features, n_features);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_features);
    for (int i = 0; i < n; ++i) {
        const double* row = features.data() + static_cast<std::size_t>(i) * n_features;
        for (int r = 0; r < n_features; ++r) {
            for (int c = r; c < n_features; ++c) gram(r, c) += row[r] * row[c];
            rhs[r] += row[r] * targets[i];
        }
    }
    gram = gram.selfadjointView<Eigen::Upper>();

    if (ridge == 0.0) {
        // Strict mode: a rank-deficient design is an error here.
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
        const double max_eig = eig.eigenvalues().maxCoeff();
        if (eig.eigenvalues().minCoeff() <= std::max(max_eig, 1.0) * 1e-12)
            throw NumericalError("regress: design matrix is rank-deficient and ridge is 0");
    }
    Eigen::MatrixXd g = gram;
    g.diagonal().array() += ridge;
    const Eigen::VectorXd c = Eigen::LDLT<Eigen::MatrixXd>(g).solve(rhs);
    return std::vector<double>(c.data(), c.data() + n_features);
}

BsdeSolution solve_backward(std::span<const SimulatedPath> batch, const TimeGrid& grid,
                            const MarketParams& params, const BsdeConfig& cfg,
                            const BsdeStepCallback& callback) {
    if (cfg.drift_source != DriftSource::FullyInformed)
        throw std::invalid_argument("solve_backward: filtered source needs filter outputs");
    return run_backward(batch, grid, params, cfg, {}, nullptr, callback);
}

BsdeSolution solve_backward_filtered(std::span<const SimulatedPath> batch,
                                     const TimeGrid& grid, const MarketParams& params,
                                     const BsdeConfig& cfg,
                                     std::span<const FilterOutput> filters,
                                     const BsdeStepCallback& callback) {
    if (filters.size() != batch.size())
        throw std::invalid_argument("solve_backward_filtered: one filter output per path");
    BsdeConfig fcfg = cfg;
    fcfg.drift_source = DriftSource::Filtered;
    // Innovations increments absorb the drift-estimation error; the
    // Z-regression must use them so that Z matches the filtered BSDE.
    std::vector<std::vector<double>> innovations(batch.size());
    parallel_for(0, static_cast<int>(batch.size()), [&](int i) {
        innovations[i] = innovations_increments(batch[i], grid, params, filters[i]);
    });
    return run_backward(batch, grid, params, fcfg, filters, &innovations, callback);
}

std::vector<double> strategy_from_solution(const BsdeSolution& sol,
                                           std::span<const SimulatedPath> batch,
                                           const TimeGrid& grid, const MarketParams& params,
                                           const BsdeConfig& cfg,
                                           std::span<const FilterOutput> filters) {
    const int n = sol.n_paths;
    const int M = sol.steps;
    if (static_cast<int>(batch.size()) != n)
        throw std::invalid_argument("strategy_from_solution: batch/solution mismatch");
    if (cfg.drift_source == DriftSource::Filtered &&
        filters.size() != static_cast<std::size_t>(n))
        throw std::invalid_argument("strategy_from_solution: filtered source needs filters");

    const double merton = params.mu / ((1.0 - cfg.p) * params.sigma * params.sigma);
    const double sig2 = params.sigma * params.sigma;
    std::vector<double> pi(static_cast<std::size_t>(M) * n);
    for (int m = 0; m < M; ++m) {
        for (int i = 0; i < n; ++i) {
            const SimulatedPath& path = batch[i];
            double value;
            if (!path.tau_index || m < *path.tau_index) {
                const double h = sol.h_at(m, i);
                if (!(h > 0.0))
                    throw NumericalError("strategy_from_solution: nonpositive H");
                value = merton + sol.z_at(m, i) / (params.sigma * h);
            } else {
                const double mu_after =
                    cfg.drift_source == DriftSource::Filtered
                        ? filters[i].mu_bar[m]
                        : drift_impacted((m - *path.tau_index) * grid.dt, 0.0, path.draw,
                                         params);
                value = mu_after / ((1.0 - cfg.p) * sig2);
            }
            pi[static_cast<std::size_t>(m) * n + i] = value;
        }
    }
    return pi;
}

std::vector<double> strategy_for_path(const BsdeSolution& sol, const SimulatedPath& path,
                                      int path_index, const TimeGrid& grid,
                                      const MarketParams& params, const BsdeConfig& cfg,
                                      const FilterOutput* filter) {
    if (path_index < 0 || path_index >= sol.n_paths)
        throw std::invalid_argument("strategy_for_path: path index out of range");
    if (cfg.drift_source == DriftSource::Filtered && !filter)
        throw std::invalid_argument("strategy_for_path: filtered source needs the filter output");
    const double merton = params.mu / ((1.0 - cfg.p) * params.sigma * params.sigma);
    const double sig2 = params.sigma * params.sigma;
    std::vector<double> pi(sol.steps);
    for (int m = 0; m < sol.steps; ++m) {
        if (!path.tau_index || m < *path.tau_index) {
            const double h = sol.h_at(m, path_index);
            if (!(h > 0.0)) throw NumericalError("strategy_for_path: nonpositive H");
            pi[m] = merton + sol.z_at(m, path_index) / (params.sigma * h);
        } else {
            const double mu_after =
                cfg.drift_source == DriftSource::Filtered
                    ? filter->mu_bar[m]
                    : drift_impacted((m - *path.tau_index) * grid.dt, 0.0, path.draw, params);
            pi[m] = mu_after / ((1.0 - cfg.p) * sig2);
        }
    }
    return pi;
}

double bsde_drift_limit(const MarketParams& params, double p, double dt) {
    return params.sigma * (1.0 - p) * std::sqrt(2.0 / (p * dt));
}

}  // namespace liqsim
