#pragma once

#include <functional>

namespace liqsim {

struct QuadratureSpec {
    double rel_tol = 1e-6;
    double abs_tol = 1e-9;
    int max_depth = 48;

    QuadratureSpec halved() const { return {0.5 * rel_tol, 0.5 * abs_tol, max_depth}; }
};

struct QuadResult {
    double value = 0.0;
    double error = 0.0;  // achieved error estimate
    bool converged = true;
};

// Adaptive Gauss-Kronrod 15(7) by interval bisection. Throws
// NumericalError only where callers ask for it; by default returns the
// achieved error so callers can decide.
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     const QuadratureSpec& spec = {});

// Convenience wrapper that throws NumericalError when the requested
// tolerance was not reached.
double integrate_checked(const std::function<double(double)>& f, double a, double b,
                         const QuadratureSpec& spec = {});

}  // namespace liqsim
