#pragma once

#include <cstddef>
#include <functional>

namespace flexdur {

struct QuadratureResult {
    double value{0.0};
    double error{0.0};
    std::size_t evaluations{0};
    bool converged{false};
};

/// Globally adaptive 15-point Gauss-Kronrod integration on a finite interval.
/// Subdivides the interval with the largest error estimate until the summed
/// error is below max(abs_tol, rel_tol * |value|) or the interval budget runs out.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           double abs_tol = 1e-10, double rel_tol = 1e-10,
                           std::size_t max_intervals = 2000);

}  // namespace flexdur
