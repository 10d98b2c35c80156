#include "flexdur/forecast.hpp"

#include "flexdur/diagnostics.hpp"
#include "flexdur/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <optional>
#include <thread>

namespace flexdur {

namespace {

constexpr double kIntegrandFloor = 1e-10;
constexpr double kQuadratureTolerance = 1e-8;

double clamp_residual(double e) {
    return std::isfinite(e) ? std::min(e, kMaxExpResidual) : kMaxExpResidual;
}

double survival_at(const ModelSpec& model, double s, double state) {
    const double y = phi_with_rate(model.dynamics(), s, state).phi;
    if (!(y > 0.0)) return 1.0;
    return std::exp(model.residual().log_survival(y));
}

}  // namespace

QuadratureResult survival_integral(const ModelSpec& model, double state) {
    if (!valid_state(model.dynamics(), state)) {
        throw DomainError("invalid state for " + model.label());
    }
    auto integrand = [&](double s) { return survival_at(model, s, state); };

    QuadratureResult total;
    total.converged = true;
    double left = 0.0;
    double right = phi_inverse(model.dynamics(), 1.0, state);
    for (int piece = 0;; ++piece) {
        if (piece > 1000 || !std::isfinite(right)) {
            throw NumericalError("survival integrand does not decay");
        }
        const auto part = integrate(integrand, left, right, 1e-10, 1e-11);
        total.value += part.value;
        total.error += part.error;
        total.evaluations += part.evaluations;
        total.converged = total.converged && part.converged;
        if (integrand(right) < kIntegrandFloor) break;
        left = right;
        right *= 2.0;
    }

    // Tail beyond the truncation point: substitute y = Phi(s). The rate dPhi/ds is
    // constant for renewal and log-ACI, and lies in [mu, Psi(right)] for SE.
    const PhiValue end = phi_with_rate(model.dynamics(), right, state);
    const double tail = model.residual().tail_integral(end.phi);
    if (const auto* se = std::get_if<SeParams>(&model.dynamics())) {
        const double lo = tail / end.rate;
        const double hi = tail / se->mu;
        total.value += 0.5 * (lo + hi);
        total.error += 0.5 * (hi - lo);
    } else {
        total.value += tail / end.rate;
    }
    return total;
}

double expected_duration(const ModelSpec& model, double state) {
    if (!valid_state(model.dynamics(), state)) {
        throw DomainError("invalid state for " + model.label());
    }
    const auto family = model.family();
    if (family == DynamicsFamily::ACD || family == DynamicsFamily::LogACD) {
        return state;
    }
    const auto result = survival_integral(model, state);
    const double tolerance = std::max(kQuadratureTolerance, 1e-10 * std::abs(result.value));
    if (!(result.error <= tolerance) || !(result.value > 0.0) || !std::isfinite(result.value)) {
        throw NumericalError("expected duration quadrature did not converge (error bound " +
                             std::to_string(result.error) + ")");
    }
    return result.value;
}

std::vector<double> filter_states(const ModelSpec& model, std::span<const double> durations, double initial_state) {
    if (!valid_state(model.dynamics(), initial_state)) {
        throw DomainError("invalid initial state for " + model.label());
    }
    std::vector<double> states;
    states.reserve(durations.size() + 1);
    states.push_back(initial_state);
    for (double tau : durations) {
        if (!(tau > 0.0)) throw DomainError("durations must be positive");
        states.push_back(psi_update(model.dynamics(), tau, states.back()));
    }
    return states;
}

FiFilter::FiFilter(const FiLogAcdSpec& spec)
    : spec_(spec), coef_(fi_filter_coefficients(spec)), ring_(coef_.size() - 1, 0.0) {}

double FiFilter::predict_centred() const {
    const std::size_t m = ring_.size();
    double acc = 0.0;
    for (std::size_t k = 1; k <= m; ++k) {
        acc -= coef_[k] * ring_[(head_ + m - (k - 1)) % m];
    }
    return acc + spec_.theta * last_innovation_;
}

double FiFilter::predict() const {
    return std::exp(spec_.mu_log + predict_centred() + 0.5 * spec_.sigma * spec_.sigma);
}

double FiFilter::update(double log_duration) {
    const double z = log_duration - spec_.mu_log;
    const double innovation = z - predict_centred();
    head_ = (head_ + 1) % ring_.size();
    ring_[head_] = z;
    ++count_;
    last_innovation_ = innovation;
    return innovation;
}

double expected_duration_fi(const FiLogAcdSpec& spec, std::span<const double> log_duration_history) {
    if (log_duration_history.size() < spec.truncation_lag) {
        throw DomainError("FI-logACD forecast needs at least truncation_lag past log durations");
    }
    FiFilter filter(spec);
    for (double x : log_duration_history) filter.update(x);
    return filter.predict();
}

void RollingConfig::validate() const {
    if (window < 200) throw DomainError("rolling window must be at least 200");
    if (horizon < 1) throw DomainError("rolling horizon must be at least 1");
    if (step < 1) throw DomainError("rolling step must be at least 1");
}

std::size_t RollingConfig::windows(std::size_t n) const {
    if (n < window + horizon) return 0;
    return (n - window - horizon) / step + 1;
}

ModelChoice ModelChoice::observation(DynamicsFamily dynamics, ResidualFamily residual) {
    if (dynamics == DynamicsFamily::LogACI && residual != ResidualFamily::Exponential) {
        throw DomainError("log-ACI dynamics are defined with standard exponential innovations only");
    }
    return {false, dynamics, residual};
}

ModelChoice ModelChoice::fi_logacd() {
    return {true, DynamicsFamily::LogACD, ResidualFamily::Exponential};
}

std::string ModelChoice::label() const {
    return fi ? std::string("FI-logACD") : model_label(dynamics, residual);
}

namespace {

struct WindowOutput {
    FitResult fit;
    std::vector<ForecastRecord> records;
    double training_mean{0.0};
};

WindowOutput run_window(std::span<const double> durations, std::size_t window_id, const ModelChoice& choice,
                        const RollingConfig& rolling, FitConfig config) {
    config.jobs = 1;
    const std::size_t start = window_id * rolling.step;
    const auto training = durations.subspan(start, rolling.window);
    const auto ahead = durations.subspan(start + rolling.window, rolling.horizon);

    WindowOutput out{choice.fi ? fit_fi_logacd(training, config) : fit(choice.dynamics, choice.residual, training, config),
                     {}, std::accumulate(training.begin(), training.end(), 0.0) / static_cast<double>(training.size())};
    out.records.reserve(ahead.size());

    if (const auto* spec = std::get_if<FiLogAcdSpec>(&out.fit.model)) {
        FiFilter filter(*spec);
        for (double tau : training) filter.update(std::log(tau));
        for (std::size_t k = 0; k < ahead.size(); ++k) {
            const double centred = filter.predict_centred();
            ForecastRecord rec;
            rec.event_index = start + rolling.window + k;
            rec.window_id = window_id;
            rec.predicted = filter.predict();
            rec.realized = ahead[k];
            rec.latent_state = std::exp(spec->mu_log + centred);
            const double innovation = filter.update(std::log(ahead[k]));
            const double scaled = spec->sigma > 0.0 ? innovation / spec->sigma : 0.0;
            rec.exp_residual = clamp_residual(-std::log(0.5 * std::erfc(scaled / std::sqrt(2.0))));
            out.records.push_back(rec);
        }
        return out;
    }

    const auto& model = std::get<ModelSpec>(out.fit.model);
    double state = default_initial_state(model.dynamics());
    for (double tau : training) state = psi_update(model.dynamics(), tau, state);
    for (std::size_t k = 0; k < ahead.size(); ++k) {
        ForecastRecord rec;
        rec.event_index = start + rolling.window + k;
        rec.window_id = window_id;
        rec.predicted = expected_duration(model, state);
        rec.realized = ahead[k];
        rec.latent_state = state;
        rec.exp_residual =
            clamp_residual(-model.residual().log_survival(phi_with_rate(model.dynamics(), ahead[k], state).phi));
        out.records.push_back(rec);
        state = psi_update(model.dynamics(), ahead[k], state);
    }
    return out;
}

}  // namespace

BacktestResult rolling_backtest(std::span<const double> durations, const ModelChoice& choice,
                                const RollingConfig& rolling, const FitConfig& fit_config, std::size_t jobs) {
    rolling.validate();
    if (durations.size() < rolling.window + rolling.horizon) {
        throw DomainError("series is shorter than window + horizon");
    }
    for (double tau : durations) {
        if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("durations must be positive and finite");
    }
    const std::size_t count = rolling.windows(durations.size());
    std::vector<std::optional<WindowOutput>> outputs(count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t w = next++; w < count; w = next++) {
            try {
                outputs[w].emplace(run_window(durations, w, choice, rolling, fit_config));
            } catch (...) {
                errors[w] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(jobs, 1, count);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    BacktestResult result;
    std::vector<std::pair<ForecastRecord, double>> rows;
    rows.reserve(count * rolling.horizon);
    for (auto& slot : outputs) {
        auto& out = *slot;
        if (!out.fit.converged) ++result.unconverged_windows;
        for (const auto& rec : out.records) rows.emplace_back(rec, out.training_mean);
        result.window_fits.push_back(std::move(out.fit));
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.first.event_index < b.first.event_index; });
    result.records.reserve(rows.size());
    result.baseline.reserve(rows.size());
    for (const auto& [rec, mean] : rows) {
        result.records.push_back(rec);
        result.baseline.push_back(mean);
    }
    return result;
}

}  // namespace flexdur
