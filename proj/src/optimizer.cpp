#include "flexdur/optimizer.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace flexdur {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Wraps the objective: maps NaN to +inf and remembers the best point seen.
class TrackedObjective {
public:
    explicit TrackedObjective(const Objective& f) : f_(f) {}

    double operator()(std::span<const double> x) {
        ++evaluations_;
        double value = f_(x);
        if (!std::isfinite(value)) {
            value = kInf;
        }
        if (value < best_value_) {
            best_value_ = value;
            best_x_.assign(x.begin(), x.end());
        }
        return value;
    }

    /// Evaluation that does not compete for the best point (gradient probes).
    double probe(std::span<const double> x) {
        ++evaluations_;
        const double value = f_(x);
        return std::isfinite(value) ? value : kInf;
    }

    [[nodiscard]] double best_value() const { return best_value_; }
    [[nodiscard]] const std::vector<double>& best_x() const { return best_x_; }
    [[nodiscard]] std::size_t evaluations() const { return evaluations_; }

private:
    const Objective& f_;
    double best_value_{kInf};
    std::vector<double> best_x_;
    std::size_t evaluations_{0};
};

void nelder_mead(TrackedObjective& f, const std::vector<double>& start, double step, std::size_t budget) {
    const std::size_t n = start.size();
    std::vector<std::vector<double>> simplex(n + 1, start);
    std::vector<double> values(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        simplex[i + 1][i] += step;
    }
    for (std::size_t i = 0; i <= n; ++i) {
        values[i] = f(simplex[i]);
    }
    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), trial(n), trial2(n);
    std::size_t used = n + 1;

    while (used < budget) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second = order[n - 1];

        double size = 0.0;
        for (std::size_t i = 0; i <= n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                size = std::max(size, std::abs(simplex[i][j] - simplex[best][j]));
            }
        }
        if (std::isfinite(values[worst]) &&
            values[worst] - values[best] <= 1e-12 * (std::abs(values[best]) + 1e-12) && size < 1e-6) {
            break;
        }

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / static_cast<double>(n);
        }
        auto along = [&](double coef, std::vector<double>& out) {
            for (std::size_t j = 0; j < n; ++j) {
                out[j] = centroid[j] + coef * (simplex[worst][j] - centroid[j]);
            }
        };

        along(-1.0, trial);
        const double fr = f(trial);
        ++used;
        if (fr < values[best]) {
            along(-2.0, trial2);
            const double fe = f(trial2);
            ++used;
            if (fe < fr) {
                simplex[worst] = trial2;
                values[worst] = fe;
            } else {
                simplex[worst] = trial;
                values[worst] = fr;
            }
            continue;
        }
        if (fr < values[second]) {
            simplex[worst] = trial;
            values[worst] = fr;
            continue;
        }
        const bool outside = fr < values[worst];
        along(outside ? -0.5 : 0.5, trial2);
        const double fc = f(trial2);
        ++used;
        if (fc < std::min(fr, values[worst])) {
            simplex[worst] = trial2;
            values[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == best) continue;
            for (std::size_t j = 0; j < n; ++j) {
                simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
            }
            values[i] = f(simplex[i]);
            ++used;
        }
    }
}

double sup_norm(const Eigen::VectorXd& v) {
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

}  // namespace

std::vector<double> numerical_gradient(const Objective& f, std::span<const double> x, double rel_step) {
    std::vector<double> point(x.begin(), x.end());
    std::vector<double> grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double h = rel_step * (1.0 + std::abs(x[i]));
        point[i] = x[i] + h;
        const double up = f(point);
        point[i] = x[i] - h;
        const double down = f(point);
        point[i] = x[i];
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

std::vector<double> numerical_hessian(const Objective& f, std::span<const double> x, double rel_step) {
    const std::size_t n = x.size();
    std::vector<double> point(x.begin(), x.end());
    std::vector<double> h(n);
    for (std::size_t i = 0; i < n; ++i) h[i] = rel_step * (1.0 + std::abs(x[i]));
    const double f0 = f(point);
    std::vector<double> hess(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        point[i] = x[i] + h[i];
        const double up = f(point);
        point[i] = x[i] - h[i];
        const double down = f(point);
        point[i] = x[i];
        hess[i * n + i] = (up - 2.0 * f0 + down) / (h[i] * h[i]);
        for (std::size_t j = 0; j < i; ++j) {
            auto eval = [&](double si, double sj) {
                point[i] = x[i] + si * h[i];
                point[j] = x[j] + sj * h[j];
                const double v = f(point);
                point[i] = x[i];
                point[j] = x[j];
                return v;
            };
            const double value =
                (eval(1, 1) - eval(1, -1) - eval(-1, 1) + eval(-1, -1)) / (4.0 * h[i] * h[j]);
            hess[i * n + j] = value;
            hess[j * n + i] = value;
        }
    }
    return hess;
}

OptimizerResult minimize(const Objective& f, std::vector<double> start, const OptimizerOptions& options) {
    const std::size_t n = start.size();
    TrackedObjective tracked(f);
    OptimizerResult result;

    if (n == 0) {
        result.value = tracked(start);
        result.x = start;
        result.converged = std::isfinite(result.value);
        result.evaluations = 1;
        return result;
    }

    const std::size_t budget = options.max_simplex_evaluations > 0 ? options.max_simplex_evaluations : 300 * n;
    nelder_mead(tracked, start, options.simplex_step, budget);
    if (!std::isfinite(tracked.best_value())) {
        result.x = start;
        result.value = kInf;
        result.evaluations = tracked.evaluations();
        result.gradient_norm = kInf;
        return result;
    }

    Objective as_objective = [&](std::span<const double> p) { return tracked.probe(p); };
    auto gradient = [&](const Eigen::VectorXd& p) {
        const auto g = numerical_gradient(as_objective, std::span<const double>(p.data(), n));
        return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(n)));
    };
    auto value_at = [&](const Eigen::VectorXd& p) { return tracked(std::span<const double>(p.data(), n)); };

    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(tracked.best_x().data(), static_cast<Eigen::Index>(n));
    double fx = tracked.best_value();
    Eigen::VectorXd g = gradient(x);
    Eigen::MatrixXd inv_hessian = Eigen::MatrixXd::Identity(n, n);
    bool scaled = false;
    int failures = 0;

    std::size_t iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        if (sup_norm(g) <= options.gradient_tolerance) {
            break;
        }
        Eigen::VectorXd direction = -inv_hessian * g;
        double slope = g.dot(direction);
        if (!(slope < 0.0)) {
            inv_hessian.setIdentity();
            direction = -g;
            slope = -g.squaredNorm();
        }
        double step = 1.0;
        Eigen::VectorXd candidate;
        double fc = kInf;
        bool accepted = false;
        for (int ls = 0; ls < 50; ++ls) {
            candidate = x + step * direction;
            fc = value_at(candidate);
            if (fc <= fx + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (++failures >= 2) break;
            inv_hessian.setIdentity();
            scaled = false;
            continue;
        }
        failures = 0;
        const Eigen::VectorXd g_new = gradient(candidate);
        const Eigen::VectorXd s = candidate - x;
        const Eigen::VectorXd y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (!scaled) {
                inv_hessian *= sy / y.squaredNorm();
                scaled = true;
            }
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
            inv_hessian = (eye - rho * s * y.transpose()) * inv_hessian * (eye - rho * y * s.transpose()) +
                          rho * s * s.transpose();
        }
        x = candidate;
        fx = fc;
        g = g_new;
        if (std::abs(s.maxCoeff()) + std::abs(s.minCoeff()) < 1e-14) {
            break;
        }
    }

    // The best tracked point is at least as good as the BFGS iterate.
    std::vector<double> best = tracked.best_x();
    double best_value = tracked.best_value();
    double gnorm = sup_norm(g);
    if (best_value < fx) {
        const auto gb = numerical_gradient(as_objective, best);
        gnorm = 0.0;
        for (double v : gb) gnorm = std::max(gnorm, std::abs(v));
    }
    result.x = std::move(best);
    result.value = best_value;
    result.iterations = iter;
    result.evaluations = tracked.evaluations();
    result.gradient_norm = gnorm;
    result.converged = gnorm <= options.gradient_tolerance;
    return result;
}

}  // namespace flexdur
