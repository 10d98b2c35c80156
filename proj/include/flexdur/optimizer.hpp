#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace flexdur {

using Objective = std::function<double(std::span<const double>)>;

struct OptimizerOptions {
    double gradient_tolerance{1e-6};  // sup-norm of the gradient
    std::size_t max_iterations{500};  // quasi-Newton iterations
    std::size_t max_simplex_evaluations{0};  // 0 -> 300 * dim
    double simplex_step{0.5};
};

struct OptimizerResult {
    std::vector<double> x;
    double value{0.0};
    bool converged{false};
    std::size_t iterations{0};
    std::size_t evaluations{0};
    double gradient_norm{0.0};
};

/// Minimises `f` with a Nelder-Mead pass followed by BFGS on central-difference
/// gradients. Non-finite objective values are treated as +inf. The returned
/// point is the best one ever evaluated.
[[nodiscard]] OptimizerResult minimize(const Objective& f, std::vector<double> start,
                                       const OptimizerOptions& options = {});

/// Central differences with step rel_step * (1 + |x_i|).
[[nodiscard]] std::vector<double> numerical_gradient(const Objective& f, std::span<const double> x,
                                                     double rel_step = 1e-5);

/// Symmetric central-difference Hessian, row-major, step rel_step * (1 + |x_i|).
[[nodiscard]] std::vector<double> numerical_hessian(const Objective& f, std::span<const double> x,
                                                    double rel_step = 1e-4);

}  // namespace flexdur
