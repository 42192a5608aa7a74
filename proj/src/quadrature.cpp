#include "liqsim/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include "liqsim/errors.hpp"

namespace liqsim {

namespace {

// 15-point Kronrod nodes on [0,1] side (symmetric) with the embedded
// 7-point Gauss rule. Standard QUADPACK constants.
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

constexpr double kWgk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

constexpr double kWg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct PanelEstimate {
    double kronrod;
    double error;
};

PanelEstimate gk15(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double gauss = fc * kWg[3];
    double kronrod = fc * kWgk[7];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kXgk[j];
        const double f1 = f(c - dx);
        const double f2 = f(c + dx);
        kronrod += kWgk[j] * (f1 + f2);
        if (j % 2 == 1) gauss += kWg[j / 2] * (f1 + f2);
    }
    kronrod *= h;
    gauss *= h;
    double err = std::abs(kronrod - gauss);
    // QUADPACK-style sharpening of the raw difference.
    if (err > 0.0) err = std::pow(200.0 * err, 1.5) * 1e-3 + 1e-300;
    err = std::min(err, std::abs(kronrod - gauss) * 200.0 + 1e-300);
    return {kronrod, err};
}

void refine(const std::function<double(double)>& f, double a, double b,
            const PanelEstimate& est, const QuadratureSpec& spec, int depth,
            double& value, double& error, bool& converged) {
    const double budget =
        std::max(spec.abs_tol * std::abs(b - a), spec.rel_tol * std::abs(est.kronrod));
    if (est.error <= budget || b - a < 1e-14 * (1.0 + std::abs(a))) {
        value += est.kronrod;
        error += est.error;
        return;
    }
    if (depth >= spec.max_depth) {
        value += est.kronrod;
        error += est.error;
        converged = false;
        return;
    }
    const double c = 0.5 * (a + b);
    const PanelEstimate left = gk15(f, a, c);
    const PanelEstimate right = gk15(f, c, b);
    refine(f, a, c, left, spec, depth + 1, value, error, converged);
    refine(f, c, b, right, spec, depth + 1, value, error, converged);
}

}  // namespace

QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     const QuadratureSpec& spec) {
    if (a == b) return {0.0, 0.0, true};
    double sign = 1.0;
    if (b < a) {
        std::swap(a, b);
        sign = -1.0;
    }
    QuadResult out;
    refine(f, a, b, gk15(f, a, b), spec, 0, out.value, out.error, out.converged);
    out.value *= sign;
    return out;
}

double integrate_checked(const std::function<double(double)>& f, double a, double b,
                         const QuadratureSpec& spec) {
    const QuadResult r = integrate(f, a, b, spec);
    if (!r.converged)
        throw NumericalError("quadrature did not converge; achieved error " +
                             std::to_string(r.error));
    return r.value;
}

}  // namespace liqsim
