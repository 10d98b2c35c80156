#include "flexdur/simulate.hpp"

#include "flexdur/errors.hpp"

#include <cmath>
#include <numeric>

namespace flexdur {

EventSeries EventSeries::from_durations(std::vector<double> durations, double origin) {
    EventSeries series;
    series.origin = origin;
    series.arrival_times.resize(durations.size());
    double t = origin;
    for (std::size_t i = 0; i < durations.size(); ++i) {
        t += durations[i];
        series.arrival_times[i] = t;
    }
    series.durations = std::move(durations);
    return series;
}

EventSeries simulate(const ModelSpec& model, std::size_t count, const SimulationOptions& options) {
    if (count < 1) {
        throw DomainError("simulate needs count >= 1");
    }
    const DynamicsSpec& dynamics = model.dynamics();
    double state = options.initial_state.value_or(default_initial_state(dynamics));
    if (!valid_state(dynamics, state)) {
        throw DomainError("invalid initial state for " + model.label());
    }

    EventSeries series;
    if (!check_stability(model).stable) {
        series.warnings.emplace_back("parameters violate the stability condition; no stationary regime");
    }

    Rng rng(options.seed);
    for (std::size_t i = 0; i < options.burn_in; ++i) {
        const double tau = phi_inverse(dynamics, model.residual().draw(rng), state);
        state = psi_update(dynamics, tau, state);
    }

    std::vector<double> durations(count);
    std::vector<double> path(count + 1);
    path[0] = state;
    std::size_t clamped = 0;
    const bool log_state = family_of(dynamics) == DynamicsFamily::LogACI || family_of(dynamics) == DynamicsFamily::LogACD;
    for (std::size_t i = 0; i < count; ++i) {
        const double tau = phi_inverse(dynamics, model.residual().draw(rng), state);
        if (!(tau > 0.0) || !std::isfinite(tau)) {
            throw NumericalError("simulated duration is not positive and finite at event " + std::to_string(i));
        }
        durations[i] = tau;
        state = psi_update(dynamics, tau, state);
        if (log_state && std::abs(std::log(state)) >= kLogStateClamp) {
            ++clamped;
        }
        path[i + 1] = state;
    }
    if (clamped > 0) {
        series.warnings.push_back("log-state clamped to +/-" + std::to_string(kLogStateClamp) + " at " +
                                  std::to_string(clamped) + " event(s)");
    }

    auto warnings = std::move(series.warnings);
    series = EventSeries::from_durations(std::move(durations));
    series.latent_path = std::move(path);
    series.warnings = std::move(warnings);
    return series;
}

std::vector<double> sample_acf(std::span<const double> values, std::size_t max_lag) {
    const std::size_t n = values.size();
    if (max_lag < 1 || n <= max_lag) {
        throw DomainError("sample_acf needs length > max_lag >= 1");
    }
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
    std::vector<double> centered(n);
    for (std::size_t i = 0; i < n; ++i) {
        centered[i] = values[i] - mean;
    }
    double gamma0 = 0.0;
    for (double c : centered) gamma0 += c * c;
    if (!(gamma0 > 0.0)) {
        throw DomainError("sample_acf: degenerate (zero) variance");
    }
    std::vector<double> acf(max_lag + 1);
    acf[0] = 1.0;
    for (std::size_t k = 1; k <= max_lag; ++k) {
        double s = 0.0;
        for (std::size_t i = k; i < n; ++i) {
            s += centered[i] * centered[i - k];
        }
        acf[k] = s / gamma0;
    }
    return acf;
}

double stationary_mean_tau(const DynamicsSpec& se_dynamics) {
    const auto* se = std::get_if<SeParams>(&se_dynamics);
    if (se == nullptr) {
        throw DomainError("stationary_mean_tau is defined for SE dynamics");
    }
    if (!(se->alpha < se->beta)) {
        throw DomainError("stationary mean needs alpha < beta (unit-mean residual)");
    }
    return (se->beta - se->alpha) / (se->beta * se->mu);
}

}  // namespace flexdur
