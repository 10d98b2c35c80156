#include "flexdur/diagnostics.hpp"

#include "flexdur/errors.hpp"
#include "flexdur/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace flexdur {

namespace {

void require_nonempty(std::span<const double> v, const char* what) {
    if (v.empty()) throw DomainError(std::string(what) + " needs at least one value");
}

}  // namespace

ExpResiduals exp_residuals(const ModelSpec& model, std::span<const double> durations, double initial_state) {
    if (!valid_state(model.dynamics(), initial_state)) {
        throw DomainError("invalid initial state for " + model.label());
    }
    ExpResiduals out;
    out.values.reserve(durations.size());
    double state = initial_state;
    for (double tau : durations) {
        if (!(tau > 0.0)) throw DomainError("durations must be positive");
        const double y = phi_with_rate(model.dynamics(), tau, state).phi;
        double e = -model.residual().log_survival(y);
        if (!std::isfinite(e) || e > kMaxExpResidual) {
            e = kMaxExpResidual;
            ++out.clamped;
        }
        out.values.push_back(e);
        state = psi_update(model.dynamics(), tau, state);
    }
    return out;
}

double ks_statistic(std::span<const double> residuals) {
    require_nonempty(residuals, "ks_statistic");
    std::vector<double> sorted(residuals.begin(), residuals.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = sorted[i] > 0.0 ? -std::expm1(-sorted[i]) : 0.0;
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return std::clamp(d, 0.0, 1.0);
}

double wasserstein_msq(std::span<const double> residuals) {
    require_nonempty(residuals, "wasserstein_msq");
    std::vector<double> u(residuals.size());
    std::transform(residuals.begin(), residuals.end(), u.begin(), [](double e) { return -std::expm1(-e); });
    std::sort(u.begin(), u.end());
    const double n = static_cast<double>(u.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double diff = u[i] - (static_cast<double>(i) + 0.5) / n;
        acc += diff * diff;
    }
    return acc / n;
}

std::vector<std::pair<double, double>> pp_points(const ModelSpec& model, std::span<const double> durations,
                                                 double initial_state) {
    const auto residuals = exp_residuals(model, durations, initial_state);
    std::vector<double> v(residuals.values.size());
    std::transform(residuals.values.begin(), residuals.values.end(), v.begin(),
                   [](double e) { return -std::expm1(-e); });
    std::sort(v.begin(), v.end());
    std::vector<std::pair<double, double>> out(v.size());
    const double n = static_cast<double>(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = {v[i], (static_cast<double>(i) + 0.5) / n};
    return out;
}

ForecastMetrics forecast_metrics(std::span<const double> predicted, std::span<const double> realized) {
    if (predicted.size() != realized.size()) throw DomainError("predicted and realized differ in length");
    if (realized.size() < 2) throw DomainError("forecast metrics need at least 2 records");
    const double n = static_cast<double>(realized.size());
    const double mean = std::accumulate(realized.begin(), realized.end(), 0.0) / n;
    double sse = 0.0;
    double sst = 0.0;
    for (std::size_t i = 0; i < realized.size(); ++i) {
        sse += (realized[i] - predicted[i]) * (realized[i] - predicted[i]);
        sst += (realized[i] - mean) * (realized[i] - mean);
    }
    if (!(sst > 0.0)) throw DomainError("realized durations have zero variance");
    return {std::sqrt(sse / n) / mean, 1.0 - sse / sst};
}

ForecastMetrics forecast_metrics(std::span<const ForecastRecord> records) {
    std::vector<double> predicted(records.size());
    std::vector<double> realized(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        predicted[i] = records[i].predicted;
        realized[i] = records[i].realized;
    }
    return forecast_metrics(predicted, realized);
}

DescriptiveStats descriptive_stats(std::span<const double> durations) {
    if (durations.size() < 2) throw DomainError("descriptive statistics need at least 2 values");
    DescriptiveStats s;
    s.count = durations.size();
    const double n = static_cast<double>(s.count);
    s.mean = std::accumulate(durations.begin(), durations.end(), 0.0) / n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double x : durations) {
        const double d = x - s.mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    s.sd = std::sqrt(m2 / (n - 1.0));
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (m2 > 0.0) {
        s.skewness = m3 / std::pow(m2, 1.5);
        s.kurtosis = m4 / (m2 * m2);
    }
    std::vector<double> sorted(durations.begin(), durations.end());
    std::sort(sorted.begin(), sorted.end());
    s.min = sorted.front();
    s.max = sorted.back();
    const std::size_t mid = sorted.size() / 2;
    s.median = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
    s.overdispersion = s.sd / s.mean;
    return s;
}

DiagnosticsReport diagnose_forecasts(std::span<const ForecastRecord> records, std::size_t acf_lags) {
    DiagnosticsReport report;
    const auto metrics = forecast_metrics(records);
    report.rrmse = metrics.rrmse;
    report.r_squared = metrics.r_squared;
    report.n_forecasts = records.size();
    std::vector<double> residuals(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) residuals[i] = records[i].exp_residual;
    report.ks = ks_statistic(residuals);
    report.wasserstein = wasserstein_msq(residuals);
    if (records.size() > acf_lags) {
        try {
            report.residual_acf = sample_acf(residuals, acf_lags);
        } catch (const DomainError&) {
            report.residual_acf.clear();
        }
    }
    return report;
}

}  // namespace flexdur
