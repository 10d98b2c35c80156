#include "flexdur/estimate.hpp"

#include "flexdur/errors.hpp"
#include "flexdur/optimizer.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <random>

namespace flexdur {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Step {
    double phi;
    double log_rate;
    double next;
};

inline Step step(const SeParams& p, double tau, double x) noexcept {
    const double excess = x - p.mu + p.alpha;
    const double em1 = std::expm1(-p.beta * tau);
    const double rate = p.mu + excess * (1.0 + em1);
    return {p.mu * tau - excess * em1 / p.beta, std::log(rate), rate};
}

inline Step step(const AcdParams& p, double tau, double x) noexcept {
    return {tau / x, -std::log(x), p.b0 + p.a * tau + p.b1 * x};
}

inline Step step(const LogAcdParams& p, double tau, double x) noexcept {
    const double lx = std::log(x);
    const double next = std::clamp(p.b0 + p.a * std::log(tau) + p.b1 * lx, -kLogStateClamp, kLogStateClamp);
    return {tau / x, -lx, std::exp(next)};
}

inline Step step(const LogAciParams& p, double tau, double x) noexcept {
    const double lx = std::log(x);
    const double next = std::clamp(p.b0 + p.a * (x * tau - 1.0) + p.b1 * lx, -kLogStateClamp, kLogStateClamp);
    return {x * tau, lx, std::exp(next)};
}

inline Step step(const RenewalParams&, double tau, double) noexcept {
    return {tau, 0.0, 1.0};
}

struct LoglikValue {
    double value;
    std::size_t bad_index;  // == size when every term is finite
};

template <class Dyn>
LoglikValue loglik_kernel(const Dyn& dyn, const ResidualSpec& residual, std::span<const double> durations,
                          double state) noexcept {
    double total = 0.0;
    for (std::size_t i = 0; i < durations.size(); ++i) {
        const Step s = step(dyn, durations[i], state);
        const double term = residual.log_pdf(s.phi) + s.log_rate;
        if (!std::isfinite(term)) {
            return {std::numeric_limits<double>::quiet_NaN(), i};
        }
        total += term;
        state = s.next;
    }
    return {total, durations.size()};
}

LoglikValue loglik_unchecked(const ModelSpec& model, std::span<const double> durations, double state) noexcept {
    return std::visit([&](const auto& dyn) { return loglik_kernel(dyn, model.residual(), durations, state); },
                      model.dynamics());
}

double logistic(double x) {
    return 1.0 / (1.0 + std::exp(-x));
}

double logit(double p) {
    return std::log(p / (1.0 - p));
}

// (a, b1, 1 - a - b1) = softmax(e1, e2, 0)
std::pair<double, double> simplex_pair(double e1, double e2) {
    const double m = std::max({e1, e2, 0.0});
    const double w1 = std::exp(e1 - m);
    const double w2 = std::exp(e2 - m);
    const double w0 = std::exp(-m);
    const double total = w0 + w1 + w2;
    return {w1 / total, w2 / total};
}

double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void require_positive_durations(std::span<const double> durations) {
    for (std::size_t i = 0; i < durations.size(); ++i) {
        if (!(durations[i] > 0.0) || !std::isfinite(durations[i])) {
            throw DomainError("duration " + std::to_string(i) + " is not positive and finite");
        }
    }
}

std::vector<double> starting_point(DynamicsFamily family, ResidualFamily residual, std::span<const double> durations) {
    const double m = mean_of(durations);
    double var = 0.0;
    for (double t : durations) var += (t - m) * (t - m);
    var /= static_cast<double>(durations.size() - 1);
    const double kappa = std::clamp(m * m / var, 0.1, 10.0);

    std::vector<double> start;
    switch (family) {
        case DynamicsFamily::SE: {
            const double beta = 0.05 / m;
            start = {0.5 / m, 0.5 * beta, beta};
            break;
        }
        case DynamicsFamily::ACD: start = {0.05 * m, 0.05, 0.9}; break;
        case DynamicsFamily::LogACD: start = {0.05 * std::log(m), 0.05, 0.9}; break;
        case DynamicsFamily::LogACI: start = {-0.1 * std::log(m), 0.05, 0.9}; break;
        case DynamicsFamily::Renewal: break;
    }
    switch (residual) {
        case ResidualFamily::Exponential: break;
        case ResidualFamily::Gamma: start.push_back(kappa); break;
        case ResidualFamily::GenGamma:
            start.push_back(kappa);
            start.push_back(1.0);
            break;
        case ResidualFamily::Burr:
            start.push_back(2.0);
            start.push_back(1.0);
            break;
    }
    return start;
}


// Observed information in the unconstrained coordinates, mapped back to the
// natural parameters with the delta method.
std::vector<double> delta_method_std_errors(const Objective& total_negloglik, std::span<const double> free,
                                            const std::function<std::vector<double>(std::span<const double>)>& to_natural) {
    const std::size_t k = free.size();
    if (k == 0) return {};
    const auto hess = numerical_hessian(total_negloglik, free, 1e-4);
    Eigen::MatrixXd info(k, k);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            info(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = hess[i * k + j];
        }
    }
    if (!info.allFinite()) return {};
    Eigen::LLT<Eigen::MatrixXd> llt(info);
    if (llt.info() != Eigen::Success) return {};
    const Eigen::MatrixXd cov_free = llt.solve(Eigen::MatrixXd::Identity(k, k));

    const std::size_t m = to_natural(free).size();
    Eigen::MatrixXd jac(m, k);
    std::vector<double> point(free.begin(), free.end());
    for (std::size_t j = 0; j < k; ++j) {
        const double h = 1e-6 * (1.0 + std::abs(free[j]));
        point[j] = free[j] + h;
        const auto up = to_natural(point);
        point[j] = free[j] - h;
        const auto down = to_natural(point);
        point[j] = free[j];
        for (std::size_t i = 0; i < m; ++i) {
            jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (up[i] - down[i]) / (2.0 * h);
        }
    }
    const Eigen::MatrixXd cov = jac * cov_free * jac.transpose();
    std::vector<double> se(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double v = cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
        if (!(v > 0.0)) return {};
        se[i] = std::sqrt(v);
    }
    return se;
}

struct MultiStartOutcome {
    OptimizerResult best;
    std::size_t converged{0};
    double spread{0.0};
};

MultiStartOutcome multi_start(const Objective& objective, const std::vector<double>& start, const FitConfig& config,
                              const std::function<std::vector<double>(std::span<const double>)>& to_natural) {
    const std::size_t restarts = std::max<std::size_t>(1, config.restarts);
    std::vector<std::vector<double>> starts(restarts, start);
    for (std::size_t r = 1; r < restarts; ++r) {
        Rng rng(config.seed + 7919 * r);
        std::normal_distribution<double> jitter(0.0, 0.5);
        for (double& v : starts[r]) v += jitter(rng);
    }
    OptimizerOptions options;
    options.gradient_tolerance = config.tolerance;
    options.max_iterations = config.max_iterations;

    std::vector<OptimizerResult> runs(restarts);
    if (config.jobs > 1 && restarts > 1) {
        std::vector<std::future<OptimizerResult>> tasks;
        for (std::size_t r = 0; r < restarts; ++r) {
            tasks.push_back(std::async(std::launch::async, [&, r] { return minimize(objective, starts[r], options); }));
        }
        for (std::size_t r = 0; r < restarts; ++r) runs[r] = tasks[r].get();
    } else {
        for (std::size_t r = 0; r < restarts; ++r) runs[r] = minimize(objective, starts[r], options);
    }

    MultiStartOutcome out;
    std::size_t best = 0;
    for (std::size_t r = 1; r < restarts; ++r) {
        if (runs[r].value < runs[best].value) best = r;
    }
    const auto best_natural = to_natural(runs[best].x);
    for (const auto& run : runs) {
        if (!run.converged) continue;
        ++out.converged;
        const auto natural = to_natural(run.x);
        for (std::size_t i = 0; i < natural.size(); ++i) {
            const double scale = std::max(std::abs(best_natural[i]), 1e-12);
            out.spread = std::max(out.spread, std::abs(natural[i] - best_natural[i]) / scale);
        }
    }
    out.best = runs[best];
    return out;
}

}  // namespace

std::string FitResult::label() const {
    if (const auto* m = std::get_if<ModelSpec>(&model)) return m->label();
    return "FI-logACD";
}

double loglik(const ModelSpec& model, std::span<const double> durations, double initial_state) {
    require_positive_durations(durations);
    if (!valid_state(model.dynamics(), initial_state)) {
        throw DomainError("invalid initial state for " + model.label());
    }
    const LoglikValue result = loglik_unchecked(model, durations, initial_state);
    if (result.bad_index != durations.size()) {
        throw NumericalError("log-likelihood term " + std::to_string(result.bad_index) + " is not finite");
    }
    return result.value;
}

double loglik(const ModelSpec& model, std::span<const double> durations) {
    return loglik(model, durations, default_initial_state(model.dynamics()));
}

Parameterization::Parameterization(DynamicsFamily dynamics, ResidualFamily residual)
    : dynamics_(dynamics), residual_(residual) {
    if (dynamics == DynamicsFamily::LogACI && residual != ResidualFamily::Exponential) {
        throw DomainError("log-ACI dynamics are defined with standard exponential innovations only");
    }
    names_ = dynamics_param_names(dynamics);
    for (auto& n : ResidualSpec::param_names(residual)) names_.push_back(n);
}

std::vector<double> Parameterization::natural(std::span<const double> free) const {
    std::vector<double> out(free.size());
    std::size_t k = 0;
    switch (dynamics_) {
        case DynamicsFamily::SE: {
            const double beta = std::exp(free[2]);
            out[0] = std::exp(free[0]);
            out[1] = beta * logistic(free[1]);
            out[2] = beta;
            k = 3;
            break;
        }
        case DynamicsFamily::ACD:
        case DynamicsFamily::LogACD: {
            const auto [a, b1] = simplex_pair(free[1], free[2]);
            out[0] = dynamics_ == DynamicsFamily::ACD ? std::exp(free[0]) : free[0];
            out[1] = a;
            out[2] = b1;
            k = 3;
            break;
        }
        case DynamicsFamily::LogACI:
            out[0] = free[0];
            out[1] = free[1];
            out[2] = std::tanh(free[2]);
            k = 3;
            break;
        case DynamicsFamily::Renewal: break;
    }
    switch (residual_) {
        case ResidualFamily::Exponential: break;
        case ResidualFamily::Gamma: out[k] = std::exp(free[k]); break;
        case ResidualFamily::GenGamma:
            out[k] = std::exp(free[k]);
            out[k + 1] = std::exp(free[k + 1]);
            break;
        case ResidualFamily::Burr: {
            // s1 * s2 = 1 + exp(e1), s2 = exp(e2)
            const double s2 = std::exp(free[k + 1]);
            out[k] = (1.0 + std::exp(free[k])) / s2;
            out[k + 1] = s2;
            break;
        }
    }
    return out;
}

std::vector<double> Parameterization::unconstrained(std::span<const double> natural) const {
    if (natural.size() != size()) {
        throw DomainError("parameter vector has the wrong length");
    }
    std::vector<double> out(natural.size());
    std::size_t k = 0;
    switch (dynamics_) {
        case DynamicsFamily::SE:
            out[0] = std::log(natural[0]);
            out[1] = logit(natural[1] / natural[2]);
            out[2] = std::log(natural[2]);
            k = 3;
            break;
        case DynamicsFamily::ACD:
        case DynamicsFamily::LogACD: {
            const double rest = 1.0 - natural[1] - natural[2];
            out[0] = dynamics_ == DynamicsFamily::ACD ? std::log(natural[0]) : natural[0];
            out[1] = std::log(natural[1] / rest);
            out[2] = std::log(natural[2] / rest);
            k = 3;
            break;
        }
        case DynamicsFamily::LogACI:
            out[0] = natural[0];
            out[1] = natural[1];
            out[2] = std::atanh(natural[2]);
            k = 3;
            break;
        case DynamicsFamily::Renewal: break;
    }
    switch (residual_) {
        case ResidualFamily::Exponential: break;
        case ResidualFamily::Gamma: out[k] = std::log(natural[k]); break;
        case ResidualFamily::GenGamma:
            out[k] = std::log(natural[k]);
            out[k + 1] = std::log(natural[k + 1]);
            break;
        case ResidualFamily::Burr:
            out[k] = std::log(natural[k] * natural[k + 1] - 1.0);
            out[k + 1] = std::log(natural[k + 1]);
            break;
    }
    return out;
}

ModelSpec Parameterization::model(std::span<const double> free) const {
    const auto theta = natural(free);
    const std::size_t nd = dynamics_param_names(dynamics_).size();
    const std::span<const double> all(theta);
    return ModelSpec(make_dynamics(dynamics_, all.first(nd)), make_residual(residual_, all.subspan(nd)));
}

FitResult fit(DynamicsFamily family, ResidualFamily residual_family, std::span<const double> durations,
              const FitConfig& config) {
    if (durations.size() < 200) {
        throw DomainError("fit needs at least 200 durations");
    }
    if (!(config.tolerance > 0.0)) {
        throw DomainError("fit tolerance must be positive");
    }
    require_positive_durations(durations);
    const Parameterization param(family, residual_family);
    const double n = static_cast<double>(durations.size());

    Objective total = [&](std::span<const double> free) {
        try {
            const ModelSpec model = param.model(free);
            const double init = default_initial_state(model.dynamics());
            if (!valid_state(model.dynamics(), init)) return kInf;
            const LoglikValue v = loglik_unchecked(model, durations, init);
            return v.bad_index == durations.size() ? -v.value : kInf;
        } catch (const std::exception&) {
            return kInf;
        }
    };
    Objective mean = [&](std::span<const double> free) { return total(free) / n; };
    auto to_natural = [&](std::span<const double> free) { return param.natural(free); };

    const auto start = param.unconstrained(starting_point(family, residual_family, durations));
    const MultiStartOutcome outcome = multi_start(mean, start, config, to_natural);

    FitResult result{param.model(outcome.best.x), param.names(), param.natural(outcome.best.x), {}};
    result.loglik = -outcome.best.value * n;
    result.converged = outcome.best.converged && std::isfinite(outcome.best.value);
    result.iterations = outcome.best.iterations;
    result.final_gradient_norm = outcome.best.gradient_norm;
    result.nobs = durations.size();
    result.restarts = std::max<std::size_t>(1, config.restarts);
    result.restarts_converged = outcome.converged;
    result.restart_spread = outcome.spread;
    if (std::isfinite(outcome.best.value)) {
        result.std_errors = delta_method_std_errors(total, outcome.best.x, to_natural);
    }
    return result;
}

// ---------------------------------------------------------------------------
// FI-logACD

FiLogAcdSpec FiLogAcdSpec::create(double mu_log, double d, double phi, double theta, double sigma,
                                  std::size_t truncation_lag) {
    if (!(d > 0.0 && d < 0.5)) throw DomainError("FI-logACD needs d in (0, 1/2)");
    if (!(std::abs(phi) < 1.0)) throw DomainError("FI-logACD needs |phi| < 1");
    if (!(std::abs(theta) < 1.0)) throw DomainError("FI-logACD needs |theta| < 1");
    if (!(sigma >= 0.0) || !std::isfinite(mu_log)) throw DomainError("FI-logACD needs sigma >= 0 and finite mu");
    if (truncation_lag < 50) throw DomainError("FI-logACD truncation lag must be at least 50");
    return {mu_log, d, phi, theta, sigma, truncation_lag};
}

FiLogAcdSpec FiLogAcdSpec::nested_arma(double mu_log, double phi, double theta, double sigma,
                                       std::size_t truncation_lag) {
    if (!(std::abs(phi) < 1.0)) throw DomainError("FI-logACD needs |phi| < 1");
    if (!(std::abs(theta) < 1.0)) throw DomainError("FI-logACD needs |theta| < 1");
    if (!(sigma >= 0.0) || !std::isfinite(mu_log)) throw DomainError("FI-logACD needs sigma >= 0 and finite mu");
    if (truncation_lag < 50) throw DomainError("FI-logACD truncation lag must be at least 50");
    return {mu_log, 0.0, phi, theta, sigma, truncation_lag};
}

std::vector<double> fractional_difference_weights(double d, std::size_t count) {
    std::vector<double> w(count);
    if (count == 0) return w;
    w[0] = 1.0;
    for (std::size_t k = 1; k < count; ++k) {
        w[k] = w[k - 1] * (static_cast<double>(k) - 1.0 - d) / static_cast<double>(k);
    }
    return w;
}

std::vector<double> fi_filter_coefficients(const FiLogAcdSpec& spec) {
    const auto w = fractional_difference_weights(spec.d, spec.truncation_lag + 1);
    std::vector<double> c(w.size() + 1, 0.0);
    for (std::size_t k = 0; k < w.size(); ++k) {
        c[k] += w[k];
        c[k + 1] -= spec.phi * w[k];
    }
    return c;
}

std::vector<double> fi_residuals(const FiLogAcdSpec& spec, std::span<const double> log_durations) {
    const auto c = fi_filter_coefficients(spec);
    const std::size_t n = log_durations.size();
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = log_durations[i] - spec.mu_log;
    std::vector<double> eps(n);
    double prev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lags = std::min(i, c.size() - 1);
        double u = 0.0;
        for (std::size_t k = 0; k <= lags; ++k) u += c[k] * z[i - k];
        eps[i] = u - spec.theta * prev;
        prev = eps[i];
    }
    return eps;
}

FitResult fit_fi_logacd(std::span<const double> durations, const FitConfig& config) {
    if (durations.size() < 2000) {
        throw DomainError("FI-logACD fit needs at least 2000 durations");
    }
    if (config.truncation_lag < 50) {
        throw DomainError("FI-logACD truncation lag must be at least 50");
    }
    require_positive_durations(durations);
    std::vector<double> logs(durations.size());
    for (std::size_t i = 0; i < durations.size(); ++i) logs[i] = std::log(durations[i]);
    const double mu_log = mean_of(logs);
    const std::size_t lag = config.truncation_lag;
    const std::size_t used = durations.size() - lag;
    const double m = static_cast<double>(used);

    auto spec_of = [&](std::span<const double> free) {
        return FiLogAcdSpec{mu_log, 0.5 * logistic(free[0]), std::tanh(free[1]), std::tanh(free[2]),
                            std::exp(free[3]), lag};
    };
    auto to_natural = [&](std::span<const double> free) {
        const auto s = spec_of(free);
        return std::vector<double>{s.d, s.phi, s.theta, s.sigma};
    };
    Objective total = [&](std::span<const double> free) {
        const auto spec = spec_of(free);
        if (!(spec.sigma > 0.0) || !(spec.d > 0.0 && spec.d < 0.5)) return kInf;
        const auto eps = fi_residuals(spec, logs);
        double ss = 0.0;
        for (std::size_t i = lag; i < eps.size(); ++i) ss += eps[i] * eps[i];
        const double v = spec.sigma * spec.sigma;
        const double value = 0.5 * m * std::log(2.0 * M_PI * v) + 0.5 * ss / v;
        return std::isfinite(value) ? value : kInf;
    };
    Objective mean = [&](std::span<const double> free) { return total(free) / m; };

    double var = 0.0;
    for (double x : logs) var += (x - mu_log) * (x - mu_log);
    var /= static_cast<double>(logs.size() - 1);
    const std::vector<double> start{logit(0.2), std::atanh(0.1), 0.0, 0.5 * std::log(var)};

    const MultiStartOutcome outcome = multi_start(mean, start, config, to_natural);
    FitResult result{spec_of(outcome.best.x), {"d", "phi", "theta", "sigma"}, to_natural(outcome.best.x), {}};
    double jacobian = 0.0;
    for (std::size_t i = lag; i < logs.size(); ++i) jacobian += logs[i];
    result.loglik = -outcome.best.value * m - jacobian;
    result.converged = outcome.best.converged && std::isfinite(outcome.best.value);
    result.iterations = outcome.best.iterations;
    result.final_gradient_norm = outcome.best.gradient_norm;
    result.nobs = durations.size();
    result.restarts = std::max<std::size_t>(1, config.restarts);
    result.restarts_converged = outcome.converged;
    result.restart_spread = outcome.spread;
    if (std::isfinite(outcome.best.value)) {
        result.std_errors = delta_method_std_errors(total, outcome.best.x, to_natural);
    }
    return result;
}

}  // namespace flexdur
