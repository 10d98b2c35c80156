#pragma once

#include "flexdur/process.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace flexdur {

/// Event durations with their arrival times. `origin` is the time of the
/// event preceding the first duration, so arrival_times[0] = origin + durations[0].
struct EventSeries {
    std::vector<double> durations;
    std::vector<double> arrival_times;
    std::optional<std::vector<double>> latent_path;  // size durations + 1 when present
    double origin{0.0};
    std::vector<std::string> warnings;

    [[nodiscard]] std::size_t size() const noexcept { return durations.size(); }

    /// Arrival times as cumulative sums of the durations from `origin`.
    static EventSeries from_durations(std::vector<double> durations, double origin = 0.0);
};

struct SimulationOptions {
    std::uint64_t seed{1};
    std::optional<double> initial_state;  // default_initial_state() when empty
    std::size_t burn_in{0};
};

/// Exact simulation by inverse transformation: tau_n = Phi^{-1}(eps_n, X_{n-1}),
/// X_n = Psi(tau_n, X_{n-1}). Burned-in events are simulated and discarded.
[[nodiscard]] EventSeries simulate(const ModelSpec& model, std::size_t count, const SimulationOptions& options = {});

/// Biased sample autocorrelation rho(k) = gamma(k) / gamma(0) for k = 0..max_lag.
[[nodiscard]] std::vector<double> sample_acf(std::span<const double> values, std::size_t max_lag);

/// Stationary mean duration (beta - alpha) / (beta mu) of a stable SE process.
[[nodiscard]] double stationary_mean_tau(const DynamicsSpec& se_dynamics);

}  // namespace flexdur
