#pragma once

#include "flexdur/estimate.hpp"
#include "flexdur/quadrature.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace flexdur {

/// E[tau | F] = integral over s of S_eps(Phi(s, x)), evaluated numerically for any
/// dynamics. The integration range doubles until the integrand drops below 1e-10;
/// the remaining tail is added through the residual's stop-loss transform.
[[nodiscard]] QuadratureResult survival_integral(const ModelSpec& model, double state);

/// One-step conditional expected duration. ACD and log-ACD return the state itself
/// (unit-mean residuals); other dynamics use survival_integral.
/// Throws NumericalError when the quadrature error exceeds 1e-8.
[[nodiscard]] double expected_duration(const ModelSpec& model, double state);

/// X_0 = initial_state, X_n = Psi(tau_n, X_{n-1}); returns N + 1 states.
[[nodiscard]] std::vector<double> filter_states(const ModelSpec& model, std::span<const double> durations,
                                                double initial_state);

/// Streaming one-step predictor for the FI-logACD benchmark. Starts from zero
/// pre-sample values, exactly like fi_residuals.
class FiFilter {
public:
    explicit FiFilter(const FiLogAcdSpec& spec);

    /// Conditional mean of z_n given the observed past.
    [[nodiscard]] double predict_centred() const;
    /// exp(mu_log + z_hat + sigma^2 / 2).
    [[nodiscard]] double predict() const;
    /// Innovation of the observed log duration, then advances the filter.
    double update(double log_duration);

    [[nodiscard]] std::size_t observed() const noexcept { return count_; }
    [[nodiscard]] const FiLogAcdSpec& spec() const noexcept { return spec_; }

private:
    FiLogAcdSpec spec_;
    std::vector<double> coef_;
    std::vector<double> ring_;  // last coef_.size() - 1 centred values, newest at head_
    std::size_t head_{0};
    std::size_t count_{0};
    double last_innovation_{0.0};
};

/// One-step FI-logACD forecast after running the filter through the history.
/// The history must hold at least truncation_lag log durations.
[[nodiscard]] double expected_duration_fi(const FiLogAcdSpec& spec, std::span<const double> log_duration_history);

struct ForecastRecord {
    std::size_t event_index{0};
    double predicted{0.0};
    double realized{0.0};
    std::size_t window_id{0};
    double latent_state{0.0};
    double exp_residual{0.0};  // -log S(Phi(realized, state)) under the window's fit
};

struct RollingConfig {
    std::size_t window{5000};
    std::size_t horizon{100};
    std::size_t step{100};

    void validate() const;
    /// Window count for a series of n durations.
    [[nodiscard]] std::size_t windows(std::size_t n) const;
};

/// Observation-driven model family or the FI-logACD benchmark.
struct ModelChoice {
    bool fi{false};
    DynamicsFamily dynamics{DynamicsFamily::SE};
    ResidualFamily residual{ResidualFamily::Exponential};

    static ModelChoice observation(DynamicsFamily dynamics, ResidualFamily residual);
    static ModelChoice fi_logacd();
    [[nodiscard]] std::string label() const;
};

struct BacktestResult {
    std::vector<ForecastRecord> records;  // sorted by event_index, then window_id
    std::vector<FitResult> window_fits;   // indexed by window_id
    std::vector<double> baseline;         // training-window mean per record, same order
    std::size_t unconverged_windows{0};
};

/// Rolling estimation and prediction: fit on `window` durations, refilter the
/// state from the default initial state at the window's left edge, then predict
/// the next `horizon` events one step at a time. Windows advance by `step` and
/// run on up to `jobs` threads; output does not depend on `jobs`.
[[nodiscard]] BacktestResult rolling_backtest(std::span<const double> durations, const ModelChoice& choice,
                                              const RollingConfig& rolling, const FitConfig& fit_config,
                                              std::size_t jobs = 1);

}  // namespace flexdur
