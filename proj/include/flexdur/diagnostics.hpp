#pragma once

#include "flexdur/forecast.hpp"

#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace flexdur {

/// Residuals are capped at -log(1e-16) when the survival probability underflows.
inline constexpr double kMaxExpResidual = 36.841361487904734;

struct ExpResiduals {
    std::vector<double> values;
    std::size_t clamped{0};
};

/// e_n = -log(1 - F_eps(Phi(tau_n, X_{n-1}))) with states filtered from initial_state.
[[nodiscard]] ExpResiduals exp_residuals(const ModelSpec& model, std::span<const double> durations,
                                         double initial_state);

/// sup |F_emp - (1 - e^{-x})|, checked on both sides of every jump.
[[nodiscard]] double ks_statistic(std::span<const double> residuals);

/// Mean squared distance between sorted PIT values 1 - e^{-e} and the uniform grid (i - 0.5)/N.
[[nodiscard]] double wasserstein_msq(std::span<const double> residuals);

/// Sorted conditional-CDF values F_eps(Phi(tau_n, X_{n-1})) paired with (i - 0.5)/N.
[[nodiscard]] std::vector<std::pair<double, double>> pp_points(const ModelSpec& model,
                                                               std::span<const double> durations,
                                                               double initial_state);

struct ForecastMetrics {
    double rrmse{0.0};
    double r_squared{0.0};
};

/// rRMSE = RMSE / mean(realized); R^2 = 1 - SSE / SST.
[[nodiscard]] ForecastMetrics forecast_metrics(std::span<const double> predicted, std::span<const double> realized);
[[nodiscard]] ForecastMetrics forecast_metrics(std::span<const ForecastRecord> records);

struct DescriptiveStats {
    std::size_t count{0};
    double mean{0.0};
    double sd{0.0};
    double min{0.0};
    double median{0.0};
    double max{0.0};
    std::optional<double> skewness;  // empty when sd == 0
    std::optional<double> kurtosis;  // non-excess; empty when sd == 0
    double overdispersion{0.0};
};

[[nodiscard]] DescriptiveStats descriptive_stats(std::span<const double> durations);

struct DiagnosticsReport {
    double rrmse{0.0};
    double r_squared{0.0};
    double ks{0.0};
    double wasserstein{0.0};
    std::vector<double> residual_acf;  // lags 0..20
    std::size_t n_forecasts{0};
};

/// Metrics over out-of-sample records, using each record's exponential residual.
[[nodiscard]] DiagnosticsReport diagnose_forecasts(std::span<const ForecastRecord> records,
                                                   std::size_t acf_lags = 20);

}  // namespace flexdur
